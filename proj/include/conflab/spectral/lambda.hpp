#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "conflab/operators/forms.hpp"

namespace conflab::spectral {

using domain::Field;
using domain::Index;
using domain::Region;
using metrics::ConformalMetric;
using operators::FormSet;
using operators::SpMat;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SpectralResult {
  bool infinite = false;  // empty region: lambda = +inf by convention
  double lambda = kInf;
  double lower_bound = -kInf;  // certified lower bound on lambda
  Field eigenfunction;         // full grid, >= 0, normalized in L^2_delta
  double delta = 0.0;
  int iterations = 0;
  double residual = 0.0;  // ||Ku - lambda M u||_{M^-1} / ||u||_M
  bool converged = false;
  bool certified = false;
};

struct EigenOptions {
  double tol = 1e-8;          // relative residual
  double stall_tol = 1e-6;    // accepted residual once rounding stalls progress
  double cert_tol = 1e-4;     // relative width of [lower_bound, lambda]
  int max_iter = 400;
  int restarts = 2;
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

// Connected components of the sparsity graph of a symmetric matrix.
inline std::vector<std::vector<Index>> components(const SpMat& K) {
  const Index n = K.rows();
  std::vector<Index> comp(static_cast<size_t>(n), -1);
  std::vector<std::vector<Index>> out;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (comp[static_cast<size_t>(s)] >= 0) continue;
    const Index id = static_cast<Index>(out.size());
    out.emplace_back();
    stack.push_back(s);
    comp[static_cast<size_t>(s)] = id;
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      out.back().push_back(v);
      for (SpMat::InnerIterator it(K, v); it; ++it) {
        const Index w = it.row();
        if (w != v && it.value() != 0.0 && comp[static_cast<size_t>(w)] < 0) {
          comp[static_cast<size_t>(w)] = id;
          stack.push_back(w);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

inline SpMat submatrix(const SpMat& K, const std::vector<Index>& idx) {
  std::vector<Index> pos(static_cast<size_t>(K.rows()), -1);
  for (size_t k = 0; k < idx.size(); ++k) pos[static_cast<size_t>(idx[k])] = static_cast<Index>(k);
  std::vector<Eigen::Triplet<double>> t;
  for (Index c : idx)
    for (SpMat::InnerIterator it(K, c); it; ++it) {
      const Index r = pos[static_cast<size_t>(it.row())];
      if (r >= 0) t.emplace_back(r, pos[static_cast<size_t>(c)], it.value());
    }
  SpMat A(static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

struct Pencil {
  double theta = kInf;
  double lower = -kInf;
  double residual = kInf;
  Field x;
  int iterations = 0;
  bool converged = false;
  bool certified = false;
};

inline void rayleigh(const SpMat& K, const Field& m, const Field& x, double& theta, double& lower, double& res) {
  const Field Kx = K * x;
  const Field mx = m.cwiseProduct(x);
  const double xm = x.dot(mx);
  theta = x.dot(Kx) / xm;
  const Field r = Kx - theta * mx;
  res = std::sqrt(r.cwiseQuotient(m).dot(r) / xm);
  lower = kInf;
  for (Index i = 0; i < x.size(); ++i) lower = std::min(lower, Kx(i) / mx(i));
}

inline void normalize(const Field& m, Field& x) {
  for (Index i = 0; i < x.size(); ++i) x(i) = std::max(std::fabs(x(i)), 1e-290);
  x /= std::sqrt(x.dot(m.cwiseProduct(x)));
}

// Shift-and-invert on one connected component. K is a Z-matrix and m > 0, so for a
// positive iterate x, min_i (Kx)_i/(m_i x_i) <= lambda_min <= Rayleigh(x); every shift is
// placed below that certified lower bound, which keeps K - sigma M positive definite.
inline Pencil connected_pencil(const SpMat& K, const Field& m, Field x, const EigenOptions& opt, double floor) {
  Pencil p;
  normalize(m, x);
  operators::SymmetricSolver solver;
  double best_lower = -kInf;
  std::vector<double> history;
  for (int it = 0; it <= opt.max_iter; ++it) {
    double theta, lower, res;
    rayleigh(K, m, x, theta, lower, res);
    best_lower = std::max(best_lower, lower);
    history.push_back(res);
    if (theta < p.theta || it == 0 || res < p.residual) {
      p.theta = theta;
      p.residual = res;
      p.x = x;
    }
    p.iterations = it;
    p.lower = best_lower;
    const double scale = std::max(std::fabs(theta), floor);
    const bool stalled = history.size() > 3 && res > 0.5 * history[history.size() - 4];
    p.converged = res <= opt.tol * scale || (stalled && res <= opt.stall_tol * scale);
    p.certified = theta - best_lower <= opt.cert_tol * scale;
    if (p.converged && (p.certified || stalled)) break;
    if (it == opt.max_iter) break;
    double gap = std::max(theta - best_lower, 0.0);
    double sigma = best_lower - std::max(0.05 * gap, 1e-3 * opt.cert_tol * scale);
    bool ok = false;
    for (int tries = 0; tries < 30 && !ok; ++tries) {
      SpMat A = K;
      A.diagonal() -= sigma * m;
      ok = solver.factor_spd(A);
      if (!ok) sigma -= std::max(std::fabs(theta - sigma), floor) * (tries + 1);
    }
    if (!ok) break;
    x = solver.solve(m.cwiseProduct(x));
    normalize(m, x);
  }
  return p;
}

}  // namespace detail

// Smallest eigenpair of K u = lambda diag(m) u for symmetric Z-matrix K.
inline SpectralResult smallest_eigenpair(const SpMat& K, const Field& m, const EigenOptions& opt = {}) {
  SpectralResult res;
  if (K.rows() == 0) {
    res.infinite = true;
    res.converged = res.certified = true;
    res.lower_bound = kInf;
    return res;
  }
  std::vector<double> ratios(static_cast<size_t>(K.rows()));
  for (Index i = 0; i < K.rows(); ++i) ratios[static_cast<size_t>(i)] = std::fabs(K.coeff(i, i) / m(i));
  const double floor = std::max(1e-9 * detail::median(ratios), 1e-300);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Field x_full = Field::Zero(K.rows());
  double best = kInf, lower = kInf, resid = 0.0;
  bool conv = true, cert = true;
  int iters = 0;
  for (const auto& comp : detail::components(K)) {
    const SpMat Kc = detail::submatrix(K, comp);
    Field mc(static_cast<Index>(comp.size()));
    for (size_t k = 0; k < comp.size(); ++k) mc(static_cast<Index>(k)) = m(comp[k]);
    detail::Pencil p = detail::connected_pencil(Kc, mc, Field::Ones(Kc.rows()), opt, floor);
    for (int r = 0; r < opt.restarts && !(p.converged && p.certified); ++r) {
      Field x0(Kc.rows());
      for (Index i = 0; i < x0.size(); ++i) x0(i) = unif(rng);
      detail::Pencil q = detail::connected_pencil(Kc, mc, x0, opt, floor);
      if ((q.converged && q.certified) || q.theta < p.theta) p = q;
    }
    iters += p.iterations;
    lower = std::min(lower, p.lower);
    if (p.theta < best) {
      best = p.theta;
      resid = p.residual;
      conv = p.converged;
      x_full.setZero();
      for (size_t k = 0; k < comp.size(); ++k) x_full(comp[k]) = p.x(static_cast<Index>(k));
    }
    cert = cert && p.certified;
  }
  res.lambda = best;
  res.lower_bound = lower;
  res.residual = resid;
  res.converged = conv;
  res.certified = cert && lower >= best - opt.cert_tol * std::max(std::fabs(best), floor);
  res.iterations = iters;
  res.eigenfunction = x_full;
  return res;
}

inline SpectralResult lambda_delta(const FormSet& forms, const EigenOptions& opt = {}) {
  SpectralResult out;
  out.delta = forms.delta;
  if (forms.empty()) {
    out.infinite = true;
    out.converged = out.certified = true;
    out.lower_bound = kInf;
    out.eigenfunction = Field::Zero(forms.grid->size());
    return out;
  }
  const SpMat K = forms.K_active();
  const Field m = forms.reduce(forms.M_delta);
  SpectralResult r = smallest_eigenpair(K, m, opt);
  r.delta = forms.delta;
  Field u = r.eigenfunction.cwiseAbs();
  u /= std::sqrt(u.dot(m.cwiseProduct(u)));
  r.eigenfunction = forms.expand(u);
  return r;
}

inline SpectralResult lambda_delta(const ConformalMetric& g, const Region& V, double delta, const EigenOptions& opt = {}) {
  return lambda_delta(operators::restrict(operators::assemble(g, delta), V), opt);
}

}  // namespace conflab::spectral
