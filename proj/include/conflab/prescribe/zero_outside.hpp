#pragma once

#include "conflab/domain/quadrature.hpp"
#include "conflab/prescribe/common.hpp"

namespace conflab::prescribe {

struct ZeroOutsideOptions {
  double eta_step = 0.25;
  int max_halvings = 6;
  bool precheck = true;
  spectral::ClassifyOptions classify;
};

struct ZeroOutsideResult {
  ConformalMetric metric;   // phi^{N-2} g
  Field phi;
  double radius = 0.0;      // snapped to a node
  Index boundary = 0;       // node index of the radius
  std::vector<double> etas;
  std::vector<double> min_phi;
  int halvings = 0;
  double exterior_sup_R = 0.0;  // sup |R| of the result on the exterior (free nodes)
};

// Quintic on [a, b]: value 1 with zero slope and curvature at a; value 1, slope d1, curvature d2 at b.
inline double quintic_blend(double x, double a, double b, double d1, double d2) {
  if (x <= a) return 1.0;
  const double L = b - a, t = (x - a) / L;
  const double t3 = t * t * t;
  const double h1 = t3 * (-4.0 + t * (7.0 - 3.0 * t));
  const double h2 = 0.5 * t3 * (1.0 + t * (-2.0 + t));
  return 1.0 + L * d1 * h1 + L * L * d2 * h2;
}

inline ZeroOutsideResult zero_scalar_outside(const ConformalMetric& g, double r, const ZeroOutsideOptions& opt = {}) {
  const domain::Grid& G = *g.grid;
  if (!G.radial()) throw Error(ErrorCode::InvalidConfig, "zero_scalar_outside needs a radial grid");
  const Index Mn = G.size();
  const Field& x = G.r();
  Index j = 0;
  for (Index i = 1; i < Mn; ++i)
    if (std::fabs(x(i) - r) < std::fabs(x(j) - r)) j = i;
  if (j < 2 || j > Mn - 4) throw Error(ErrorCode::OutOfDomain, "zero_scalar_outside radius leaves no exterior");

  ZeroOutsideResult out;
  out.radius = x(j);
  out.boundary = j;
  const domain::Region E = domain::exterior(g.grid, out.radius);
  if (opt.precheck) {
    const auto v = spectral::classify_sign(g, E, spectral::default_deltas(G.dim()), opt.classify);
    if (v.verdict != spectral::Sign::Positive)
      throw Error(ErrorCode::NotYamabePositive, std::string("exterior region is ") + spectral::to_string(v.verdict));
  }

  // Unknowns: exterior nodes strictly between the boundary node and the Dirichlet node.
  std::vector<Index> nodes;
  for (Index i = j + 1; i < Mn - 1; ++i) nodes.push_back(i);
  const Index n = static_cast<Index>(nodes.size());
  const SpMat K = g.stiffness();
  const Field M = g.volume();
  SpMat A(n, n);
  {
    std::vector<Eigen::Triplet<double>> t;
    for (Index k = 0; k < n; ++k)
      for (SpMat::InnerIterator e(K, nodes[static_cast<size_t>(k)]); e; ++e) {
        const Index row = e.row() - (j + 1);
        if (row >= 0 && row < n) t.emplace_back(row, k, e.value());
      }
    A.setFromTriplets(t.begin(), t.end());
  }
  Field MR(n);
  for (Index k = 0; k < n; ++k) MR(k) = M(nodes[static_cast<size_t>(k)]) * g.R(nodes[static_cast<size_t>(k)]);

  // A_g + eta diag(MR) = K_g + (eta - 1) diag(MR).
  operators::SymmetricSolver solver;
  auto solve_eta = [&](double eta, Field& u) {
    SpMat B = A;
    B.diagonal() += (eta - 1.0) * MR;
    if (!solver.factor_general(B)) return false;
    u = solver.solve(-eta * MR);
    return (u.array() > -1.0).all();
  };

  Field u = Field::Zero(n);
  double eta = 0.0, step = opt.eta_step;
  out.etas.push_back(0.0);
  out.min_phi.push_back(1.0);
  while (eta < 1.0) {
    const double next = std::min(1.0, eta + step);
    Field trial;
    if (solve_eta(next, trial)) {
      u = trial;
      eta = next;
      out.etas.push_back(eta);
      out.min_phi.push_back(1.0 + u.minCoeff());
      continue;
    }
    if (++out.halvings > opt.max_halvings)
      throw Error(ErrorCode::PositivityLoss, "continuation lost positivity at eta = " + io::fmt_double(next));
    step *= 0.5;
  }

  Field phi = Field::Ones(Mn);
  for (Index k = 0; k < n; ++k) phi(nodes[static_cast<size_t>(k)]) += u(k);
  double w1[3], w2[3];
  domain::fd::quad_weights(x(j), x(j + 1), x(j + 2), x(j), w1, w2);
  const double d1 = w1[0] * phi(j) + w1[1] * phi(j + 1) + w1[2] * phi(j + 2);
  const double d2 = w2[0] * phi(j) + w2[1] * phi(j + 1) + w2[2] * phi(j + 2);
  const double a = 0.5 * out.radius;
  for (Index i = 0; i < j; ++i) phi(i) = quintic_blend(x(i), a, out.radius, d1, d2);
  if (phi.minCoeff() <= 0.0) throw Error(ErrorCode::PositivityLoss, "inward blend of the exterior factor is not positive");

  out.phi = phi;
  out.metric = metrics::conformal_transform(g, phi);
  for (Index i : nodes) out.exterior_sup_R = std::max(out.exterior_sup_R, std::fabs(out.metric.R(i)));
  return out;
}

}  // namespace conflab::prescribe
