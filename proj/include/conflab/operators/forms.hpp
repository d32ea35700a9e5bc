#pragma once

#include <sstream>
#include <vector>

#include "conflab/metrics/conformal_metric.hpp"
#include "conflab/operators/linsolve.hpp"

namespace conflab::operators {

using domain::Grid;
using domain::GridPtr;
using domain::Region;
using metrics::ConformalMetric;

// Quadratic forms of the Rayleigh quotients, on the full node set plus an active subset.
struct FormSet {
  GridPtr grid;
  Constants c{};
  double delta = 0.0;
  SpMat K;        // int a|du|_g^2 + R_g u^2 dV_g
  Field M_delta;  // int u^2 rho^{-2 delta - n} dV_g (diagonal)
  Field M;        // int u^2 dV_g (diagonal)
  std::vector<Index> active;
  bool empty_region = false;

  bool empty() const { return active.empty(); }
  Index n_active() const { return static_cast<Index>(active.size()); }

  std::vector<Index> positions() const {
    std::vector<Index> pos(static_cast<size_t>(K.rows()), -1);
    for (size_t k = 0; k < active.size(); ++k) pos[static_cast<size_t>(active[k])] = static_cast<Index>(k);
    return pos;
  }

  SpMat K_active() const {
    const auto pos = positions();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<size_t>(K.nonZeros()));
    for (Index col = 0; col < K.outerSize(); ++col) {
      const Index pc = pos[static_cast<size_t>(col)];
      if (pc < 0) continue;
      for (SpMat::InnerIterator it(K, col); it; ++it) {
        const Index pr = pos[static_cast<size_t>(it.row())];
        if (pr >= 0) t.emplace_back(pr, pc, it.value());
      }
    }
    SpMat A(n_active(), n_active());
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
  }

  Field reduce(const Field& u) const {
    Field out(n_active());
    for (size_t k = 0; k < active.size(); ++k) out(static_cast<Index>(k)) = u(active[k]);
    return out;
  }

  Field expand(const Field& v) const {
    Field out = Field::Zero(K.rows());
    for (size_t k = 0; k < active.size(); ++k) out(active[k]) = v(static_cast<Index>(k));
    return out;
  }

  // u restricted to the active set (entries elsewhere are ignored).
  double energy(const Field& u) const {
    const Field v = expand(reduce(u));
    return v.dot(K * v);
  }

  double mass_delta(const Field& u) const {
    double s = 0.0;
    for (Index i : active) s += M_delta(i) * u(i) * u(i);
    return s;
  }

  // (int |u|^q dV_g)^{1/q} over the active set.
  double lq_norm(const Field& u, double q) const {
    double s = 0.0;
    for (Index i : active) s += M(i) * std::pow(std::fabs(u(i)), q);
    return std::pow(s, 1.0 / q);
  }
};

struct AssemblyOptions {
  bool direct = false;  // Laplace-Beltrami with psi^2 edge weights and finite-difference R
};

inline Field mass_weight(const Grid& g, double delta) {
  const Field rho = domain::weight_rho(g);
  return rho.array().pow(-2.0 * delta - g.dim()).matrix();
}

inline void check_delta(const Constants& c, double delta) {
  if (!(delta > c.delta_star))
    throw Error(ErrorCode::BadDelta, "delta must exceed delta* = " + std::to_string(c.delta_star));
}

inline FormSet assemble(const ConformalMetric& g, double delta, AssemblyOptions opt = {}) {
  check_delta(g.c, delta);
  FormSet f;
  f.grid = g.grid;
  f.c = g.c;
  f.delta = delta;
  f.M = g.volume();
  f.M_delta = f.M.cwiseProduct(mass_weight(*g.grid, delta));
  if (!opt.direct) {
    f.K = g.stiffness();
  } else {
    const auto& edges = g.op->edges;
    Field scale(static_cast<Index>(edges.size()));
    for (size_t e = 0; e < edges.size(); ++e) {
      const double pe = 0.5 * (g.psi(edges[e].i) + g.psi(edges[e].j));
      scale(static_cast<Index>(e)) = pe * pe;
    }
    const Field Rfd = metrics::scalar_curvature_fd(g);
    f.K = metrics::stiffness_from_edges(g.grid->size(), edges, f.M.cwiseProduct(Rfd), g.c.a, &scale);
  }
  for (Index i = 0; i < g.grid->size(); ++i)
    if (i != g.grid->dirichlet_node()) f.active.push_back(i);
  return f;
}

// Test functions supported in V: active set intersected with V's nodes.
inline FormSet restrict(const FormSet& forms, const Region& V) {
  if (V.grid() != forms.grid) throw Error(ErrorCode::InvalidConfig, "region and forms live on different grids");
  FormSet out = forms;
  out.active.clear();
  for (Index i : forms.active)
    if (V.contains(i)) out.active.push_back(i);
  out.empty_region = out.active.empty();
  return out;
}

// -a Delta_g u + R_g u at every node.
inline Field apply_conformal_laplacian(const ConformalMetric& g, const Field& u) {
  const Field Ku = g.psi.cwiseProduct(g.op->K * g.psi.cwiseProduct(u));
  return Ku.cwiseQuotient(g.volume());
}

// -a Delta_g u alone.
inline Field apply_laplacian_part(const ConformalMetric& g, const Field& u) {
  return apply_conformal_laplacian(g, u) - g.R.cwiseProduct(u);
}

inline std::string dump_coo(const SpMat& A) {
  std::ostringstream out;
  out.precision(17);
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (Index col = 0; col < A.outerSize(); ++col)
    for (SpMat::InnerIterator it(A, col); it; ++it) out << it.row() << " " << it.col() << " " << it.value() << "\n";
  return out.str();
}

}  // namespace conflab::operators
