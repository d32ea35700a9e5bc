#pragma once

#include <cmath>
#include <optional>

#include "conflab/domain/region.hpp"

namespace conflab::domain {

inline void check_field(const Grid& g, const Field& f) {
  if (f.size() != g.size()) throw Error(ErrorCode::InvalidConfig, "field length does not match grid");
}

inline double integrate(const Grid& g, const Field& f) {
  check_field(g, f);
  return g.weights().dot(f);
}

// Quadrature over V with dual cells clipped to V.
inline double integrate(const Region& V, const Field& f) {
  const Grid& g = *V.grid();
  check_field(g, f);
  double s = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double frac = V.cell_fraction(i);
    if (frac > 0.0) s += frac * g.weights()(i) * f(i);
  }
  return s;
}

namespace fd {

// Weights of the derivative of the quadratic through (x0,x1,x2), evaluated at x.
inline void quad_weights(double x0, double x1, double x2, double x, double d1[3], double d2[3]) {
  const double a0 = (x0 - x1) * (x0 - x2), a1 = (x1 - x0) * (x1 - x2), a2 = (x2 - x0) * (x2 - x1);
  d1[0] = ((x - x1) + (x - x2)) / a0;
  d1[1] = ((x - x0) + (x - x2)) / a1;
  d1[2] = ((x - x0) + (x - x1)) / a2;
  d2[0] = 2.0 / a0;
  d2[1] = 2.0 / a1;
  d2[2] = 2.0 / a2;
}

// Radial first and second derivative; f'(0) = 0 and f''(0) from the even expansion.
inline void radial_derivatives(const Grid& g, const Field& f, Field& d1, Field& d2) {
  const Field& r = g.r();
  const Index M = g.size();
  d1.resize(M);
  d2.resize(M);
  d1(0) = 0.0;
  d2(0) = 2.0 * (f(1) - f(0)) / (r(1) * r(1));
  double w1[3], w2[3];
  for (Index i = 1; i < M - 1; ++i) {
    quad_weights(r(i - 1), r(i), r(i + 1), r(i), w1, w2);
    d1(i) = w1[0] * f(i - 1) + w1[1] * f(i) + w1[2] * f(i + 1);
    d2(i) = w2[0] * f(i - 1) + w2[1] * f(i) + w2[2] * f(i + 1);
  }
  quad_weights(r(M - 3), r(M - 2), r(M - 1), r(M - 1), w1, w2);
  d1(M - 1) = w1[0] * f(M - 3) + w1[1] * f(M - 2) + w1[2] * f(M - 1);
  d2(M - 1) = w2[0] * f(M - 3) + w2[1] * f(M - 2) + w2[2] * f(M - 1);
}

// Flat Laplacian by finite differences (independent of the finite-volume operator).
inline Field laplacian(const Grid& g, const Field& f) {
  check_field(g, f);
  const int n = g.dim();
  Field out(g.size());
  if (g.radial()) {
    Field d1, d2;
    radial_derivatives(g, f, d1, d2);
    out(0) = n * d2(0);
    for (Index i = 1; i < g.size(); ++i) out(i) = d2(i) + (n - 1) * d1(i) / g.r()(i);
    return out;
  }
  const double h2 = g.spacing() * g.spacing();
  for (Index i = 0; i < g.size(); ++i) {
    double s = -2.0 * n * f(i);
    for (int k = 0; k < n; ++k) s += f(g.shift(i, k, 1)) + f(g.shift(i, k, -1));
    out(i) = s / h2;
  }
  return out;
}

inline Field gradient_norm(const Grid& g, const Field& f) {
  check_field(g, f);
  Field out(g.size());
  if (g.radial()) {
    Field d1, d2;
    radial_derivatives(g, f, d1, d2);
    return d1.cwiseAbs();
  }
  const double h = g.spacing();
  for (Index i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
      const double d = (f(g.shift(i, k, 1)) - f(g.shift(i, k, -1))) / (2.0 * h);
      s += d * d;
    }
    out(i) = std::sqrt(s);
  }
  return out;
}

// Frobenius norm of the Hessian.
inline Field hessian_norm(const Grid& g, const Field& f) {
  check_field(g, f);
  const int n = g.dim();
  Field out(g.size());
  if (g.radial()) {
    Field d1, d2;
    radial_derivatives(g, f, d1, d2);
    out(0) = std::sqrt(static_cast<double>(n)) * std::fabs(d2(0));
    for (Index i = 1; i < g.size(); ++i) {
      const double t = d1(i) / g.r()(i);
      out(i) = std::sqrt(d2(i) * d2(i) + (n - 1) * t * t);
    }
    return out;
  }
  const double h2 = g.spacing() * g.spacing();
  for (Index i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
      const Index p = g.shift(i, k, 1), m = g.shift(i, k, -1);
      const double dkk = (f(p) - 2.0 * f(i) + f(m)) / h2;
      s += dkk * dkk;
      for (int l = k + 1; l < n; ++l) {
        const double dkl = (f(g.shift(p, l, 1)) - f(g.shift(p, l, -1)) - f(g.shift(m, l, 1)) + f(g.shift(m, l, -1))) / (4.0 * h2);
        s += 2.0 * dkl * dkl;
      }
    }
    out(i) = std::sqrt(s);
  }
  return out;
}

}  // namespace fd

struct NormSpec {
  int k = 0;
  double p = 2.0;
  double delta = 0.0;
};

// sum_{j<=k} || rho^{-delta - n/p + j} |nabla^j f| ||_{L^p}
inline double weighted_norm(const Field& f, const NormSpec& spec, const Grid& g, const Field& rho,
                            const Field* grad = nullptr, const Field* hess = nullptr) {
  check_field(g, f);
  check_field(g, rho);
  if (spec.k < 0 || spec.k > 2) throw Error(ErrorCode::InvalidConfig, "derivative order must be 0, 1 or 2");
  if (!(spec.p > 1.0)) throw Error(ErrorCode::InvalidExponent, "p must exceed 1");
  const int n = g.dim();
  Field derivs[3];
  derivs[0] = f.cwiseAbs();
  if (spec.k >= 1) derivs[1] = grad ? *grad : fd::gradient_norm(g, f);
  if (spec.k >= 2) derivs[2] = hess ? *hess : fd::hessian_norm(g, f);
  double total = 0.0;
  for (int j = 0; j <= spec.k; ++j) {
    const Field& d = derivs[j];
    if (d.size() != g.size() || !d.allFinite())
      throw Error(ErrorCode::MissingDerivatives, "derivative of order " + std::to_string(j) + " unavailable");
    const double e = -spec.delta - n / spec.p + j;
    double s = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
      const double v = std::pow(rho(i), e) * std::fabs(d(i));
      s += g.weights()(i) * std::pow(v, spec.p);
    }
    total += std::pow(s, 1.0 / spec.p);
  }
  return total;
}

// Vol_mu(V) = int_V rho^{-mu} dV, optionally against a volume density (e.g. psi^N).
inline double weighted_volume(const Region& V, double mu, const Field* density = nullptr) {
  const Grid& g = *V.grid();
  if (!(mu > g.dim())) throw Error(ErrorCode::InvalidExponent, "mu must exceed n");
  const Field rho = weight_rho(g);
  Field f = rho.array().pow(-mu).matrix();
  if (density) f = f.cwiseProduct(*density);
  return integrate(V, f);
}

}  // namespace conflab::domain
