#pragma once

#include <limits>
#include <string>
#include <vector>

#include "conflab/metrics/target.hpp"
#include "conflab/spectral/classify.hpp"

namespace conflab::prescribe {

using domain::Field;
using domain::Index;
using metrics::ConformalMetric;
using metrics::CurvatureTarget;
using operators::SpMat;

enum class Status { Solved, Diverged, Failed, Indeterminate };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Solved: return "Solved";
    case Status::Diverged: return "Diverged";
    case Status::Failed: return "Failed";
    case Status::Indeterminate: return "Indeterminate";
  }
  return "?";
}

struct TraceRow {
  std::string stage;
  double q = 0.0;
  int iteration = 0;
  double value = 0.0;  // F_q, or 0 for equation solves
  double gradient_norm = 0.0;
  double residual = 0.0;
  double sup_u = 0.0;
  double norm_2delta = 0.0;
};

struct StageSummary {
  double q = 0.0;
  double F = 0.0;
  double F_zero = 0.0;
  double sup_u = 0.0;
  double norm_2delta = 0.0;
  double el_residual = 0.0;
  int iterations = 0;
  bool accepted = false;
};

struct SolveResult {
  Status status = Status::Failed;
  Field phi;                    // factor relative to the input metric
  double residual = 0.0;        // || -a Lap phi + R phi - R' phi^{N-1} ||, L^2_{delta-2}
  double curvature_error = 0.0; // || R_fd(phi^{N-2} g) - R' ||, L^2_{delta-2}
  double tolerance = 0.0;
  double delta = 0.0;
  bool has_verdict = false;
  spectral::Sign verdict = spectral::Sign::Positive;
  bool inconsistent = false;
  std::vector<TraceRow> trace;
  std::vector<StageSummary> stages;
  std::vector<std::string> notes;
  std::string message;
};

// Nodes carrying unknowns: everything except the outer Dirichlet node.
inline std::vector<Index> free_nodes(const domain::Grid& g) {
  std::vector<Index> a;
  for (Index i = 0; i < g.size(); ++i)
    if (i != g.dirichlet_node()) a.push_back(i);
  return a;
}

// Discrete L^2_{delta'} norm with the metric volume M over the given nodes.
inline double weighted_l2(const ConformalMetric& g, const Field& f, double delta_p, const std::vector<Index>& nodes) {
  const Field M = g.volume();
  const Field rho = domain::weight_rho(*g.grid);
  double s = 0.0;
  for (Index i : nodes) s += M(i) * std::pow(rho(i), -2.0 * delta_p - g.grid->dim()) * f(i) * f(i);
  return std::sqrt(s);
}

// -a Lap_g phi + R_g phi - R' phi^{N-1}, pointwise (finite-volume).
inline Field equation_residual(const ConformalMetric& g, const Field& Rp, const Field& phi) {
  const Field L = operators::apply_conformal_laplacian(g, phi);
  Field r(phi.size());
  for (Index i = 0; i < phi.size(); ++i) r(i) = L(i) - Rp(i) * std::pow(std::fabs(phi(i)), g.c.N - 1.0);
  return r;
}

inline double residual_norm(const ConformalMetric& g, const Field& Rp, const Field& phi, double delta) {
  return weighted_l2(g, equation_residual(g, Rp, phi), delta - 2.0, free_nodes(*g.grid));
}

// Independent check: finite-difference curvature of phi^{N-2} g against R'.
inline double curvature_error(const ConformalMetric& g, const Field& Rp, const Field& phi, double delta) {
  const Field w = g.psi.cwiseProduct(phi);
  const Field R = metrics::scalar_curvature_fd(*g.grid, g.base, *g.op, w, g.c);
  return weighted_l2(g, R - Rp, delta - 2.0, free_nodes(*g.grid));
}

// Size of the residual that rounding alone produces for this phi.
inline double rounding_floor(const ConformalMetric& g, const Field& Rp, const Field& phi, double delta, double power = 0.0) {
  if (power <= 0.0) power = g.c.N - 1.0;
  const SpMat K = g.stiffness().cwiseAbs();
  const Field M = g.volume();
  const Field s = K * phi.cwiseAbs();
  Field f(phi.size());
  for (Index i = 0; i < phi.size(); ++i)
    f(i) = s(i) / M(i) + std::fabs(Rp(i)) * std::pow(std::fabs(phi(i)), power);
  return 4.0 * std::numeric_limits<double>::epsilon() * weighted_l2(g, f, delta - 2.0, free_nodes(*g.grid));
}

inline double sup_abs(const Field& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

struct NewtonOptions {
  double tol = 1e-9;  // absolute, on the L^2_{delta-2} residual
  double delta = 0.0;
  int max_iter = 60;
};

struct NewtonResult {
  Field phi;
  bool converged = false;
  bool regularized = false;
  int iterations = 0;
  double residual = 0.0;
};

// Damped Newton for K phi = M R' |phi|^{q-2} phi on the free nodes, keeping phi > 0.
inline NewtonResult newton_critical(const ConformalMetric& g, const Field& Rp, double q, Field phi, const NewtonOptions& opt,
                                    std::vector<TraceRow>* trace = nullptr, const std::string& stage = "newton") {
  const SpMat K = g.stiffness();
  const Field M = g.volume();
  const auto nodes = free_nodes(*g.grid);
  std::vector<Index> pos(static_cast<size_t>(phi.size()), -1);
  for (size_t k = 0; k < nodes.size(); ++k) pos[static_cast<size_t>(nodes[k])] = static_cast<Index>(k);
  const Index n = static_cast<Index>(nodes.size());

  auto residual_field = [&](const Field& p) {
    const Field Kp = K * p;
    Field r = Field::Zero(p.size());
    for (Index i : nodes) r(i) = Kp(i) / M(i) - Rp(i) * std::pow(std::fabs(p(i)), q - 1.0);
    return r;
  };
  auto merit = [&](const Field& r) { return weighted_l2(g, r, opt.delta - 2.0, nodes); };

  NewtonResult out;
  Field r = residual_field(phi);
  double res = merit(r);
  operators::SymmetricSolver solver;
  int slow = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    out.iterations = it;
    if (trace) trace->push_back({stage, q, it, 0.0, 0.0, res, sup_abs(phi.array() - 1.0), 0.0});
    if (res <= opt.tol || slow >= 3) break;
    std::vector<Eigen::Triplet<double>> t;
    for (Index col = 0; col < K.outerSize(); ++col) {
      const Index pc = pos[static_cast<size_t>(col)];
      if (pc < 0) continue;
      for (SpMat::InnerIterator e(K, col); e; ++e) {
        const Index pr = pos[static_cast<size_t>(e.row())];
        if (pr >= 0) t.emplace_back(pr, pc, e.value());
      }
    }
    Field diag(n), F(n), mass(n);
    for (Index k = 0; k < n; ++k) {
      const Index i = nodes[static_cast<size_t>(k)];
      diag(k) = -(q - 1.0) * M(i) * Rp(i) * std::pow(std::fabs(phi(i)), q - 2.0);
      F(k) = M(i) * r(i);
      mass(k) = M(i);
    }
    SpMat J(n, n);
    J.setFromTriplets(t.begin(), t.end());
    J.diagonal() += diag;
    if (!solver.factor_general(J)) {
      // Singular Jacobian: one Tikhonov-regularized retry.
      std::vector<double> ratios;
      for (Index k = 0; k < n; ++k) ratios.push_back(std::fabs(J.coeff(k, k) / mass(k)));
      J.diagonal() += 1e-8 * spectral::detail::median(ratios) * mass;
      out.regularized = true;
      if (!solver.factor_general(J)) break;
    }
    const Field d = -solver.solve(F);
    double alpha = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h, alpha *= 0.5) {
      Field trial = phi;
      bool positive = true;
      for (Index k = 0; k < n; ++k) {
        const Index i = nodes[static_cast<size_t>(k)];
        trial(i) += alpha * d(k);
        if (!(trial(i) > 0.0)) positive = false;
      }
      if (!positive) continue;
      const Field rt = residual_field(trial);
      const double mt = merit(rt);
      if (mt < (1.0 - 1e-4 * alpha) * res || (h > 30 && mt < res)) {
        slow = mt > 0.5 * res ? slow + 1 : 0;
        phi = trial;
        r = rt;
        res = mt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.phi = phi;
  out.residual = res;
  out.converged = res <= std::max(opt.tol, rounding_floor(g, Rp, phi, opt.delta, q - 1.0));
  return out;
}

}  // namespace conflab::prescribe
