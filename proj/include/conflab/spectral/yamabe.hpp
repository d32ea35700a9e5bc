#pragma once

#include <vector>

#include "conflab/spectral/lambda.hpp"

namespace conflab::spectral {

struct YamabeOptions {
  std::vector<double> q_schedule;  // ascending exponents; N is appended if missing
  double step = 1.0;               // initial line-search step
  int max_iter = 3000;             // per exponent
  double tol = 1e-6;               // stationarity
  double delta = 0.0;              // weight used for the initial eigenfunction
  int max_halvings = 50;
  int min_resolved_nodes = 10;  // nodes with u >= max(u)/2; 0 disables
};

struct YamabeTraceRow {
  int iteration = 0;
  double q = 0.0;
  double value = 0.0;
  double stationarity = 0.0;
  double step = 0.0;
};

struct YamabeEstimate {
  bool infinite = false;
  double y_value = kInf;
  double recomputed = kInf;  // same quotient from the base operator and psi*u
  Field minimizer;           // full grid, ||u||_N = 1
  std::vector<YamabeTraceRow> trace;
  std::vector<double> schedule;
  double stationarity = 0.0;
  bool stationary = false;
  bool stalled = false;              // LineSearchStall
  bool resolution_limited = false;   // stopped by the resolved-support guard
  int iterations = 0;
};

namespace detail {

struct QuotientPieces {
  const SpMat& K;
  const Field& m;
  double q;

  double norm(const Field& u) const {
    double s = 0.0;
    for (Index i = 0; i < u.size(); ++i) s += m(i) * std::pow(std::fabs(u(i)), q);
    return std::pow(s, 1.0 / q);
  }
  double value(const Field& u) const {
    const double nq = norm(u);
    return u.dot(K * u) / (nq * nq);
  }
  // Half the gradient at a normalized u: Ku - Q m |u|^{q-2} u.
  Field half_gradient(const Field& u, double Q) const {
    Field g = K * u;
    for (Index i = 0; i < u.size(); ++i) g(i) -= Q * m(i) * std::pow(std::fabs(u(i)), q - 1.0) * (u(i) < 0 ? -1.0 : 1.0);
    return g;
  }
};

inline int resolved_nodes(const Field& u) {
  const double half = 0.5 * u.maxCoeff();
  int c = 0;
  for (Index i = 0; i < u.size(); ++i) c += u(i) >= half ? 1 : 0;
  return c;
}

}  // namespace detail

// Q^y(u) evaluated from the base operator on psi*u, independent of the assembled K_g.
inline double yamabe_quotient_base(const ConformalMetric& g, const Field& u) {
  const Field w = g.psi.cwiseProduct(u);
  double s = 0.0;
  for (Index i = 0; i < w.size(); ++i) s += g.op->vol(i) * std::pow(std::fabs(w(i)), g.c.N);
  return w.dot(g.op->K * w) / std::pow(s, 2.0 / g.c.N);
}

inline double yamabe_quotient(const FormSet& forms, const Field& u) {
  const double n = forms.lq_norm(u, forms.c.N);
  return forms.energy(u) / (n * n);
}

// Projected, preconditioned gradient descent on {u >= 0, ||u||_q = 1} with Armijo steps.
inline YamabeEstimate yamabe_invariant(const ConformalMetric& g, const Region& V, const YamabeOptions& opt = {}) {
  YamabeEstimate est;
  const double N = g.c.N;
  est.schedule = opt.q_schedule;
  if (est.schedule.empty() || est.schedule.back() < N) est.schedule.push_back(N);
  for (double q : est.schedule)
    if (!(q > 2.0 && q <= N)) throw Error(ErrorCode::InvalidConfig, "q schedule must lie in (2, N]");

  const FormSet forms = operators::restrict(operators::assemble(g, opt.delta), V);
  if (forms.empty()) {
    est.infinite = true;
    est.stationary = true;
    est.minimizer = Field::Zero(g.grid->size());
    return est;
  }
  const SpMat K = forms.K_active();
  const Field m = forms.reduce(forms.M);

  // Preconditioner K + cM, positive definite.
  const SpectralResult plain = smallest_eigenpair(K, m);
  std::vector<double> ratios(static_cast<size_t>(K.rows()));
  for (Index i = 0; i < K.rows(); ++i) ratios[static_cast<size_t>(i)] = std::fabs(K.coeff(i, i) / m(i));
  const double shift = std::max(0.0, -2.0 * plain.lambda) + 1e-8 * detail::median(ratios);
  SpMat P = K;
  P.diagonal() += shift * m;
  operators::SymmetricSolver solver;
  if (!solver.factor_spd(P)) throw Error(ErrorCode::NoConvergence, "Yamabe preconditioner is not positive definite");

  Field u = forms.reduce(lambda_delta(forms).eigenfunction).cwiseAbs();
  // Spikes narrower than a few cells have a discrete quotient below the continuum infimum.
  const int min_nodes = std::min(opt.min_resolved_nodes, detail::resolved_nodes(u));
  for (double q : est.schedule) {
    detail::QuotientPieces Qf{K, m, q};
    u /= Qf.norm(u);
    double Q = Qf.value(u);
    double t = opt.step;
    bool stationary = false;
    for (int it = 0; it < opt.max_iter; ++it) {
      const Field gr = Qf.half_gradient(u, Q);
      const Field d = -solver.solve(gr);
      const double decrease = -gr.dot(d);
      const double stat = std::sqrt(std::max(decrease, 0.0)) / std::max(1.0, std::fabs(Q));
      est.stationarity = stat;
      est.trace.push_back({est.iterations, q, Q, stat, t});
      if (stat <= opt.tol) {
        stationary = true;
        break;
      }
      bool accepted = false, unresolved = false;
      for (int h = 0; h <= opt.max_halvings; ++h) {
        Field v = (u + t * d).cwiseMax(0.0);
        const double nv = Qf.norm(v);
        if (nv > 0.0 && detail::resolved_nodes(v) < min_nodes) {
          unresolved = true;
        } else if (nv > 0.0) {
          v /= nv;
          const double Qv = Qf.value(v);
          if (Qv <= Q - 2e-4 * t * decrease) {
            u = v;
            Q = Qv;
            accepted = true;
            break;
          }
        }
        t *= 0.5;
      }
      ++est.iterations;
      if (!accepted || (unresolved && t < 1e-10 * opt.step)) {
        est.stalled = true;
        est.resolution_limited = unresolved;
        break;
      }
      t = std::min(2.0 * t, opt.step * 4.0);
    }
    est.stationary = stationary;
    if (est.stalled) break;
  }

  est.minimizer = forms.expand(u);
  est.minimizer /= forms.lq_norm(est.minimizer, N);
  est.y_value = yamabe_quotient(forms, est.minimizer);
  est.recomputed = yamabe_quotient_base(g, est.minimizer);
  return est;
}

}  // namespace conflab::spectral
