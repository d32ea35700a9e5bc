#pragma once

#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <functional>
#include <optional>

#include "conflab/domain/quadrature.hpp"
#include "conflab/metrics/io.hpp"
#include "conflab/spectral/classify.hpp"

namespace conflab::compactify {

using domain::Field;
using domain::Index;
using metrics::ConformalMetric;
using io::ordered_json;

// Chart at the point at infinity P: x = z/|z|^2, s = |x| = 1/r on [0, 1/r_min], P at s = 0.
// With phi = |z|^{2-n} near infinity, gbar = psibar^{N-2} e in x, psibar(s) = psi(1/s),
// so kbar = (psibar^{N-2} - 1) e and only the scalar profile is stored.
struct CompactChart {
  int n = 3;
  double r_min = 1.0;     // chart covers r >= r_min
  double r_max_ae = 0.0;  // outer radius of the source AE grid
  double tail = 0.0;      // psi - 1 = tail / r beyond r_max_ae
  Field s;                // uniform, s(0) = 0 is P
  Field psibar;
  Field kbar;             // scalar: gbar_ij - e_ij = kbar * e_ij
  std::string source = "custom";
  std::function<double(double)> exact;  // psibar(s) from an analytic profile, when known
};

struct ChartOptions {
  double r_min = 1.0;
  int nodes = 2001;
};

namespace detail {

// Cubic Lagrange interpolation on sorted nodes x.
inline double interp_cubic(const Field& x, const Field& y, double t) {
  const Index m = x.size();
  Index j = static_cast<Index>(std::upper_bound(x.data(), x.data() + m, t) - x.data()) - 2;
  j = std::clamp<Index>(j, 0, m - 4);
  double out = 0.0;
  for (Index a = j; a < j + 4; ++a) {
    double l = 1.0;
    for (Index b = j; b < j + 4; ++b)
      if (b != a) l *= (t - x(b)) / (x(a) - x(b));
    out += l * y(a);
  }
  return out;
}

inline double kbar_of(double psibar, double N) { return std::expm1((N - 2.0) * std::log1p(psibar - 1.0)); }

// First and second derivatives on a uniform grid, second order, one-sided at the ends.
inline void derivatives(const Field& s, const Field& f, Field& d1, Field& d2) {
  const Index m = s.size();
  d1.resize(m);
  d2.resize(m);
  for (Index i = 0; i < m; ++i) {
    const Index j = std::clamp<Index>(i - 1, 0, m - 3);
    double w1[3], w2[3];
    domain::fd::quad_weights(s(j), s(j + 1), s(j + 2), s(i), w1, w2);
    d1(i) = w1[0] * f(j) + w1[1] * f(j + 1) + w1[2] * f(j + 2);
    d2(i) = w2[0] * f(j) + w2[1] * f(j + 1) + w2[2] * f(j + 2);
  }
}

}  // namespace detail

// psi - 1 on the AE grid, continued by the monopole tail past r_max.
inline std::function<double(double)> ae_factor(const ConformalMetric& g) {
  const Field& r = g.grid->r();
  const Field dpsi = g.psi.array() - 1.0;
  const double rmax = g.grid->r_max();
  const double tail = dpsi(dpsi.size() - 1) * rmax;
  return [r, dpsi, rmax, tail](double x) { return x >= rmax ? tail / x : detail::interp_cubic(r, dpsi, x); };
}

inline CompactChart kelvin_compactify(const ConformalMetric& g, const ChartOptions& opt = {}) {
  if (!g.grid->radial() || g.base.tag != metrics::BaseTag::EuclideanAE)
    throw Error(ErrorCode::InvalidConfig, "kelvin_compactify needs a radial AE metric");
  if (!(opt.r_min > 0.0 && opt.r_min < g.grid->r_max())) throw Error(ErrorCode::OutOfDomain, "r_min must lie inside the AE grid");
  if (opt.nodes < 8) throw Error(ErrorCode::InvalidConfig, "chart needs at least 8 nodes");
  CompactChart c;
  c.n = g.grid->dim();
  c.r_min = opt.r_min;
  c.r_max_ae = g.grid->r_max();
  c.tail = (g.psi(g.psi.size() - 1) - 1.0) * c.r_max_ae;
  c.source = g.name;
  const auto dpsi = ae_factor(g);
  const double N = g.c.N;
  const double smax = 1.0 / opt.r_min;
  c.s.resize(opt.nodes);
  c.psibar.resize(opt.nodes);
  c.kbar.resize(opt.nodes);
  for (Index i = 0; i < opt.nodes; ++i) {
    const double s = smax * static_cast<double>(i) / static_cast<double>(opt.nodes - 1);
    c.s(i) = s;
    const double d = s == 0.0 ? 0.0 : dpsi(1.0 / s);
    c.psibar(i) = 1.0 + d;
    c.kbar(i) = detail::kbar_of(c.psibar(i), N);
  }
  c.s(opt.nodes - 1) = smax;
  if (g.profile) {
    const auto prof = g.profile;
    c.exact = [prof](double s) { return s == 0.0 ? 1.0 : prof(1.0 / s); };
  }
  return c;
}

struct Decompactified {
  ConformalMetric metric;
  double tau = 0.0;  // n/p - 2, metadata
  double p = 0.0;
  Index first_covered = 0;  // first AE node with r >= r_min
};

// AE factor psi(r) = psibar(1/r) for r >= r_min; interior nodes come from `interior` (same grid).
inline Decompactified decompactify(const CompactChart& c, const domain::GridPtr& grid, double p,
                                   const ConformalMetric* interior = nullptr) {
  if (p == static_cast<double>(c.n)) throw Error(ErrorCode::InvalidExponent, "p = n is excluded for the regularity claim");
  if (!(p > 0.5 * c.n)) throw Error(ErrorCode::InvalidExponent, "p must exceed n/2");
  if (!grid->radial() || grid->dim() != c.n) throw Error(ErrorCode::InvalidConfig, "decompactify needs a radial grid of the chart's dimension");
  const Field& r = grid->r();
  Decompactified out;
  out.p = p;
  out.tau = c.n / p - 2.0;
  Field psi(grid->size());
  out.first_covered = grid->size();
  const Field dbar = c.psibar.array() - 1.0;
  for (Index i = 0; i < grid->size(); ++i) {
    if (r(i) >= c.r_min) {
      out.first_covered = std::min(out.first_covered, i);
      psi(i) = 1.0 + detail::interp_cubic(c.s, dbar, 1.0 / r(i));
    } else if (interior) {
      psi(i) = interior->psi(i);
    } else {
      throw Error(ErrorCode::OutOfDomain, "chart does not reach r < r_min; pass the interior factor");
    }
  }
  metrics::MetricOptions mo;
  mo.check_decay = false;
  mo.tau = out.tau;
  mo.name = c.source + "*kelvin";
  mo.params = {{"p", p}, {"tau", out.tau}};
  if (interior && interior->grid == grid) mo.op = interior->op;
  out.metric = metrics::make_metric(grid, {metrics::BaseTag::EuclideanAE, 0.0}, std::move(psi), mo);
  return out;
}

struct RegularityReport {
  double p = 0.0;
  double radius = 0.0;        // ball at P, in s
  double excluded = 0.0;      // innermost shell [0, excluded) left out
  double kbar_over_x2 = 0.0;  // int |kbar|^p / |x|^{2p} dVbar
  double dkbar_over_x = 0.0;  // int |dkbar|^p / |x|^p dVbar
  double d2kbar = 0.0;        // int |d^2 kbar|^p dVbar
  double hardy_0 = 0.0;       // kbar_over_x2 / d2kbar
  double hardy_1 = 0.0;       // dkbar_over_x / d2kbar
  double inner_sup = 0.0;     // |kbar| on the innermost retained shell
};

// Tensor norms for kbar_ij = k(s) e_ij: |kbar| = sqrt(n)|k|, |dkbar| = sqrt(n)|k'|,
// |d^2 kbar|^2 = n (k''^2 + (n-1)(k'/s)^2).
inline RegularityReport regularity_check(const CompactChart& c, double p) {
  if (!(p > 0.5 * c.n)) throw Error(ErrorCode::InvalidExponent, "regularity check needs p > n/2");
  const int n = c.n;
  const double N = 2.0 * n / (n - 2.0);
  Field d1, d2;
  detail::derivatives(c.s, c.kbar, d1, d2);
  const Index m = c.s.size();
  const double omega = domain::sphere_area(n);
  const double rn = std::sqrt(static_cast<double>(n));
  Field f0(m), f1(m), f2(m);
  for (Index i = 1; i < m; ++i) {
    const double s = c.s(i);
    const double dv = omega * std::pow(s, n - 1) * std::pow(c.psibar(i), N);
    f0(i) = std::pow(rn * std::fabs(c.kbar(i)) / (s * s), p) * dv;
    f1(i) = std::pow(rn * std::fabs(d1(i)) / s, p) * dv;
    const double h2 = n * (d2(i) * d2(i) + (n - 1) * (d1(i) / s) * (d1(i) / s));
    f2(i) = std::pow(h2, 0.5 * p) * dv;
  }
  auto trap = [&](const Field& f) {
    double t = 0.0;
    for (Index i = 1; i + 1 < m; ++i) t += 0.5 * (c.s(i + 1) - c.s(i)) * (f(i) + f(i + 1));
    return t;
  };
  RegularityReport out;
  out.p = p;
  out.radius = c.s(m - 1);
  out.excluded = c.s(1);
  out.kbar_over_x2 = trap(f0);
  out.dkbar_over_x = trap(f1);
  out.d2kbar = trap(f2);
  out.hardy_0 = out.d2kbar > 0.0 ? out.kbar_over_x2 / out.d2kbar : 0.0;
  out.hardy_1 = out.d2kbar > 0.0 ? out.dkbar_over_x / out.d2kbar : 0.0;
  out.inner_sup = std::fabs(c.kbar(1));
  return out;
}

struct TestField {
  std::function<double(double)> u;  // radial profile in r
  double lo = 0.0;                  // support [lo, hi], 0 < lo < hi
  double hi = 0.0;
};

struct QuotientPair {
  double ae = 0.0;
  double compact = 0.0;
  double deviation = 0.0;
};

// Q^y_g(u) against Q^y_gbar(phibar u), phibar = |x|^{2-n}, each by adaptive quadrature in its own chart.
// Both metrics are conformally flat, so the numerators are a * int |d(factor * field)|^2 dx.
inline QuotientPair quotient_pair(const ConformalMetric& g, const CompactChart& c, const TestField& t) {
  if (!(t.lo > 0.0 && t.hi > t.lo && t.lo >= c.r_min)) throw Error(ErrorCode::OutOfDomain, "test field must be supported inside the chart");
  if (t.hi >= g.grid->r_max()) throw Error(ErrorCode::OutOfDomain, "test field must vanish before r_max");
  const int n = c.n;
  const double a = g.c.a, N = g.c.N;
  std::function<double(double)> psi;
  if (g.profile) {
    psi = g.profile;
  } else {
    const auto d = ae_factor(g);
    psi = [d](double r) { return 1.0 + d(r); };
  }
  std::function<double(double)> psibar = c.exact;
  if (!psibar) {
    const Field dbar = c.psibar.array() - 1.0;
    const Field s = c.s;
    psibar = [s, dbar](double x) { return 1.0 + detail::interp_cubic(s, dbar, x); };
  }
  using boost::math::differentiation::finite_difference_derivative;
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto quotient = [&](const std::function<double(double)>& w, double lo, double hi) {
    // The library step is absolute; rescale so it is small against the support width.
    const double L = 0.1 * (hi - lo);
    const std::function<double(double)> wl = [&](double y) { return w(y * L); };
    auto num = [&](double x) {
      const double d = finite_difference_derivative(wl, x / L) / L;
      return a * d * d * std::pow(x, n - 1);
    };
    auto den = [&](double x) { return std::pow(std::fabs(w(x)), N) * std::pow(x, n - 1); };
    const double omega = domain::sphere_area(n);
    const double top = omega * Q::integrate(num, lo, hi, 15, 1e-14);
    const double bot = omega * Q::integrate(den, lo, hi, 15, 1e-14);
    return top / std::pow(bot, 2.0 / N);
  };
  const std::function<double(double)> w_ae = [&](double r) { return psi(r) * t.u(r); };
  const std::function<double(double)> w_c = [&](double s) { return psibar(s) * std::pow(s, 2 - n) * t.u(1.0 / s); };
  QuotientPair out;
  out.ae = quotient(w_ae, t.lo, t.hi);
  out.compact = quotient(w_c, 1.0 / t.hi, 1.0 / t.lo);
  out.deviation = std::fabs(out.ae - out.compact) / std::fabs(out.ae);
  return out;
}

inline double quotient_invariance_check(const ConformalMetric& g, const CompactChart& c, const std::vector<TestField>& fields,
                                        std::vector<QuotientPair>* pairs = nullptr) {
  double worst = 0.0;
  for (const auto& t : fields) {
    const auto q = quotient_pair(g, c, t);
    worst = std::max(worst, q.deviation);
    if (pairs) pairs->push_back(q);
  }
  return worst;
}

struct CompactVerdictOptions {
  double r_min = 0.02;  // z-ball around the AE origin left out of the compact grid
  int nodes = 3000;
  double stretch = 2.0;
  spectral::ClassifyOptions classify;
};

// Yamabe type on the compact side: gbar = psibar^{N-2} e on s in (0, 1/r_min], P excised at the first node.
inline spectral::SignVerdict compact_verdict(const ConformalMetric& g, const CompactVerdictOptions& opt = {}) {
  if (!g.grid->radial()) throw Error(ErrorCode::InvalidConfig, "compact_verdict needs a radial AE metric");
  domain::GridConfig gc;
  gc.dim = g.grid->dim();
  gc.mode = domain::RadialSpec{1.0 / opt.r_min, opt.nodes, opt.stretch};
  const auto grid = domain::build_grid(gc);
  const auto d = ae_factor(g);
  Field psibar(grid->size());
  for (Index i = 0; i < grid->size(); ++i) {
    const double s = grid->r()(i);
    psibar(i) = 1.0 + (s == 0.0 ? 0.0 : d(1.0 / s));
  }
  metrics::MetricOptions mo;
  mo.check_decay = false;
  mo.name = g.name + "*compact";
  const auto gbar = metrics::make_metric(grid, {metrics::BaseTag::EuclideanAE, 0.0}, std::move(psibar), mo);
  const auto V = domain::exterior(grid, 0.0);
  return spectral::classify_sign(gbar, V, spectral::default_deltas(gc.dim), opt.classify);
}

inline metrics::MetricFiles serialize_chart(const CompactChart& c) {
  ordered_json h;
  h["format"] = "chart";
  h["version"] = io::kFormatVersion;
  h["source"] = c.source;
  h["n"] = c.n;
  h["r_min"] = c.r_min;
  h["r_max_ae"] = c.r_max_ae;
  h["tail"] = c.tail;
  h["nodes"] = c.s.size();
  io::CsvTable t;
  t.header = {"index", "s", "psibar", "kbar"};
  for (Index i = 0; i < c.s.size(); ++i)
    t.rows.push_back({std::to_string(i), io::fmt_double(c.s(i)), io::fmt_double(c.psibar(i)), io::fmt_double(c.kbar(i))});
  return {h.dump(2) + "\n", t.str()};
}

inline CompactChart parse_chart(const std::string& header, const std::string& table) {
  const auto h = ordered_json::parse(header);
  if (h.value("format", std::string()) != "chart") throw Error(ErrorCode::IoFailure, "not a chart file");
  CompactChart c;
  c.n = h.at("n").get<int>();
  c.r_min = h.at("r_min").get<double>();
  c.r_max_ae = h.at("r_max_ae").get<double>();
  c.tail = h.at("tail").get<double>();
  c.source = h.value("source", std::string("custom"));
  const auto t = io::parse_csv(table);
  c.s = io::column_field(t, "s");
  c.psibar = io::column_field(t, "psibar");
  c.kbar = io::column_field(t, "kbar");
  return c;
}

inline ordered_json regularity_to_json(const RegularityReport& r) {
  return {{"p", r.p},
          {"radius", r.radius},
          {"excluded", r.excluded},
          {"kbar_over_x2", io::json_number(r.kbar_over_x2)},
          {"dkbar_over_x", io::json_number(r.dkbar_over_x)},
          {"d2kbar", io::json_number(r.d2kbar)},
          {"hardy_0", io::json_number(r.hardy_0)},
          {"hardy_1", io::json_number(r.hardy_1)},
          {"inner_sup", io::json_number(r.inner_sup)}};
}

}  // namespace conflab::compactify
