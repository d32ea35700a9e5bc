#pragma once

#include "conflab/prescribe/common.hpp"

namespace conflab::prescribe {

struct SubcriticalOptions {
  double tol = 1e-8;      // Euler-Lagrange residual, L^2_{delta-2}
  double delta = 0.0;
  int max_iter = 100;
  double guard = 1e30;    // abandon the stage once sup|u| passes this
};

struct SubcriticalState {
  double q = 0.0;
  Field u;                     // full grid, u >= -1, zero at the Dirichlet node
  double F = 0.0;
  double F_zero = 0.0;         // F_q(0)
  double gradient_norm = 0.0;  // ||dF/2||_{L^2(dV_g)} as a function
  double el_residual = 0.0;    // || K(1+u)/M - R'(1+u)^{q-1} ||, L^2_{delta-2}
  double sup_u = 0.0;
  double norm_2delta = 0.0;
  int iterations = 0;
  int newton_steps = 0;
  bool accepted = false;
  bool guard_hit = false;
};

namespace detail {

struct Fq {
  const SpMat& K;
  const Field& M;
  const Field& Rp;
  double q;

  double value(const Field& v) const {
    double s = v.dot(K * v);
    for (Index i = 0; i < v.size(); ++i) s -= (2.0 / q) * M(i) * Rp(i) * std::pow(std::fabs(v(i)), q);
    return s;
  }
  // F(w) - F(v) without forming the two large sums.
  double change(const Field& v, const Field& w) const {
    const Field d = w - v;
    double s = d.dot(K * (w + v));
    for (Index i = 0; i < v.size(); ++i)
      if (Rp(i) != 0.0) s -= (2.0 / q) * M(i) * Rp(i) * (std::pow(std::fabs(w(i)), q) - std::pow(std::fabs(v(i)), q));
    return s;
  }
  // Half the gradient, full length; callers read the free entries.
  Field half_gradient(const Field& v) const {
    Field g = K * v;
    for (Index i = 0; i < v.size(); ++i) g(i) -= M(i) * Rp(i) * std::pow(std::fabs(v(i)), q - 1.0) * (v(i) < 0 ? -1.0 : 1.0);
    return g;
  }
};

}  // namespace detail

inline double weighted_norm_2delta(const ConformalMetric& g, const Field& u, double delta) {
  const Field M = g.volume();
  const Field rho = domain::weight_rho(*g.grid);
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i) s += M(i) * std::pow(rho(i), -2.0 * delta - g.grid->dim()) * u(i) * u(i);
  return std::sqrt(s);
}

// Minimize F_q(u) = int a|du|^2 + R(1+u)^2 - (2/q) int R'|1+u|^q over u >= -1 (v = 1 + u >= 0).
inline SubcriticalState subcritical_minimize(const ConformalMetric& g, const Field& Rp, double q, const Field& init,
                                             const SubcriticalOptions& opt = {}, std::vector<TraceRow>* trace = nullptr) {
  if (!(q >= 2.0 && q < g.c.N)) throw Error(ErrorCode::InvalidConfig, "subcritical exponent must lie in [2, N)");
  if (init.size() != g.grid->size() || (init.array() < -1.0).any())
    throw Error(ErrorCode::InvalidConfig, "initial state must be a grid field with u >= -1");
  const SpMat K = g.stiffness();
  const Field M = g.volume();
  const auto nodes = free_nodes(*g.grid);
  const Index n = static_cast<Index>(nodes.size());
  std::vector<Index> pos(static_cast<size_t>(g.grid->size()), -1);
  for (size_t k = 0; k < nodes.size(); ++k) pos[static_cast<size_t>(nodes[k])] = static_cast<Index>(k);
  SpMat Kff(n, n);
  {
    std::vector<Eigen::Triplet<double>> t;
    for (Index col = 0; col < K.outerSize(); ++col) {
      const Index pc = pos[static_cast<size_t>(col)];
      if (pc < 0) continue;
      for (SpMat::InnerIterator e(K, col); e; ++e) {
        const Index pr = pos[static_cast<size_t>(e.row())];
        if (pr >= 0) t.emplace_back(pr, pc, e.value());
      }
    }
    Kff.setFromTriplets(t.begin(), t.end());
  }
  Field Mf(n);
  for (Index k = 0; k < n; ++k) Mf(k) = M(nodes[static_cast<size_t>(k)]);

  detail::Fq F{K, M, Rp, q};
  SubcriticalState st;
  st.q = q;
  Field v = init.array() + 1.0;
  if (g.grid->dirichlet_node() >= 0) v(g.grid->dirichlet_node()) = 1.0;
  st.F_zero = F.value(Field::Ones(v.size()));

  operators::SymmetricSolver newton, precond;
  double shift = -1.0;
  auto el_residual = [&](const Field& w) {
    const Field h = F.half_gradient(w);
    Field r = Field::Zero(w.size());
    for (Index i : nodes) r(i) = h(i) / M(i);
    return r;
  };
  auto record = [&](const Field& w, double Fv) {
    const Field r = el_residual(w);
    st.F = Fv;
    st.el_residual = weighted_l2(g, r, opt.delta - 2.0, nodes);
    double s = 0.0;
    for (Index i : nodes) s += M(i) * r(i) * r(i);
    st.gradient_norm = std::sqrt(s);
    const Field u = w.array() - 1.0;
    st.sup_u = sup_abs(u);
    st.norm_2delta = weighted_norm_2delta(g, u, opt.delta);
  };

  double Fv = F.value(v);
  record(v, Fv);
  double prev_res = spectral::kInf;
  int slow = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    st.iterations = it;
    if (trace) trace->push_back({"subcritical", q, it, st.F, st.gradient_norm, st.el_residual, st.sup_u, st.norm_2delta});
    const double floor = rounding_floor(g, Rp, v, opt.delta, q - 1.0);
    if (st.el_residual <= std::max(opt.tol, floor) || (slow >= 3 && st.el_residual <= 1e3 * std::max(opt.tol, floor))) {
      st.accepted = true;
      break;
    }
    if (st.sup_u > opt.guard) {
      st.guard_hit = true;
      break;
    }
    const Field hg = F.half_gradient(v);
    Field G(n), vf(n);
    for (Index k = 0; k < n; ++k) {
      G(k) = hg(nodes[static_cast<size_t>(k)]);
      vf(k) = v(nodes[static_cast<size_t>(k)]);
    }
    SpMat H = Kff;
    for (Index k = 0; k < n; ++k) {
      const Index i = nodes[static_cast<size_t>(k)];
      H.coeffRef(k, k) -= (q - 1.0) * M(i) * Rp(i) * std::pow(std::fabs(v(i)), q - 2.0);
    }
    Field d;
    bool used_newton = false;
    if (newton.factor_spd(H)) {
      d = -newton.solve(G);
      used_newton = G.dot(d) < 0.0;
    }
    if (!used_newton) {
      // Indefinite Hessian: shift by a multiple of the mass that makes K_ff positive definite.
      if (shift < 0.0) {
        const spectral::SpectralResult lam = spectral::smallest_eigenpair(Kff, Mf);
        std::vector<double> ratios;
        for (Index k = 0; k < n; ++k) ratios.push_back(std::fabs(Kff.coeff(k, k) / Mf(k)));
        shift = std::max(0.0, -2.0 * lam.lambda) + 1e-6 * spectral::detail::median(ratios);
      }
      SpMat P = H;
      P.diagonal() += shift * Mf;
      if (!precond.factor_spd(P)) throw Error(ErrorCode::StallNoDescent, "no positive definite preconditioner");
      d = -precond.solve(G);
    }
    st.newton_steps += used_newton ? 1 : 0;
    // At most double the state per step.
    const double cap = std::max(1.0, vf.cwiseAbs().maxCoeff());
    double alpha = std::min(1.0, cap / std::max(d.cwiseAbs().maxCoeff(), 1e-300));
    if (!used_newton) alpha = cap / std::max(d.cwiseAbs().maxCoeff(), 1e-300);
    const double slope = G.dot(d);  // half the directional derivative
    bool moved = false;
    for (int h = 0; h < 60; ++h, alpha *= 0.5) {
      Field trial = v;
      for (Index k = 0; k < n; ++k) trial(nodes[static_cast<size_t>(k)]) = std::fabs(vf(k) + alpha * d(k));
      const double dF = F.change(v, trial);
      if (std::isfinite(dF) && dF <= 2e-4 * alpha * slope) {
        v = trial;
        Fv += dF;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    record(v, Fv);
    slow = st.el_residual > 0.5 * prev_res ? slow + 1 : 0;
    prev_res = st.el_residual;
  }
  if (trace && (trace->empty() || trace->back().iteration != st.iterations || trace->back().value != st.F))
    trace->push_back({"subcritical", q, st.iterations + 1, st.F, st.gradient_norm, st.el_residual, st.sup_u, st.norm_2delta});
  st.u = v.array() - 1.0;
  return st;
}

}  // namespace conflab::prescribe
