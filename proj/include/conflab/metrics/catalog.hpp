#pragma once

#include <set>
#include <string>
#include <vector>

#include "conflab/metrics/conformal_metric.hpp"

namespace conflab::metrics {

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"euclidean", "schwarzschild", "negative_well", "torus_flat",
                                              "torus_negative"};
  return names;
}

namespace detail {

inline double param(const ordered_json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw Error(ErrorCode::InvalidConfig, std::string("parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

inline void require_radial(const Grid& g, const std::string& name) {
  if (!g.radial()) throw Error(ErrorCode::InvalidConfig, name + " needs a radial grid");
}

inline void require_periodic(const Grid& g, const std::string& name) {
  if (!g.periodic()) throw Error(ErrorCode::InvalidConfig, name + " needs a periodic grid");
}

inline Field sample(const Grid& g, const std::function<double(double)>& f) {
  Field out(g.size());
  for (Index i = 0; i < g.size(); ++i) out(i) = f(g.r()(i));
  return out;
}

}  // namespace detail

// Schwarzschild factor 1 + m/(2r) for r >= r0/2, continued inward by the even octic
// matching derivatives through order four at r0/2.
inline std::function<double(double)> schwarzschild_profile(double m, double r0) {
  const double rc = 0.5 * r0;
  return [=](double r) {
    if (r >= rc) return 1.0 + m / (2.0 * r);
    const double t2 = (r / rc) * (r / rc);
    const double p = 315.0 + t2 * (-420.0 + t2 * (378.0 + t2 * (-180.0 + 35.0 * t2)));
    return 1.0 + m / (2.0 * rc) * p / 128.0;
  };
}

// Even Gaussian bump (a ring at r0 plus its mirror image, so psi is smooth at the origin).
inline std::function<double(double)> well_profile(double A, double r0, double w) {
  return [=](double r) {
    const double a = (r - r0) / w, b = (r + r0) / w;
    return 1.0 + A * (std::exp(-a * a) + std::exp(-b * b));
  };
}

inline ConformalMetric catalog(const std::string& name, const GridPtr& grid, const ordered_json& params = ordered_json::object()) {
  const Grid& g = *grid;
  const ordered_json p = params.is_null() ? ordered_json::object() : params;
  MetricOptions opt;
  opt.name = name;
  opt.tau = g.radial() ? 0.5 * (2.0 - g.dim()) : 0.0;
  if (name == "euclidean") {
    detail::require_radial(g, name);
    io::require_keys(p, {}, "euclidean params");
    opt.params = ordered_json::object();
    opt.profile = [](double) { return 1.0; };
    return make_metric(grid, {BaseTag::EuclideanAE, 0.0}, Field::Ones(g.size()), opt);
  }
  if (name == "schwarzschild") {
    detail::require_radial(g, name);
    io::require_keys(p, {"m", "r0"}, "schwarzschild params");
    const double m = detail::param(p, "m", 1.0);
    const double r0 = detail::param(p, "r0", 1.0);
    if (!(m >= 0.0) || !(r0 > 0.0)) throw Error(ErrorCode::InvalidConfig, "schwarzschild needs m >= 0 and r0 > 0");
    opt.params = {{"m", m}, {"r0", r0}};
    opt.profile = schwarzschild_profile(m, r0);
    return make_metric(grid, {BaseTag::EuclideanAE, 0.0}, detail::sample(g, opt.profile), opt);
  }
  if (name == "negative_well") {
    detail::require_radial(g, name);
    io::require_keys(p, {"A", "r0", "w"}, "negative_well params");
    const double A = detail::param(p, "A", 0.5);
    const double r0 = detail::param(p, "r0", 3.0);
    const double w = detail::param(p, "w", 1.0);
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidConfig, "negative_well needs w > 0");
    opt.params = {{"A", A}, {"r0", r0}, {"w", w}};
    opt.profile = well_profile(A, r0, w);
    return make_metric(grid, {BaseTag::EuclideanAE, 0.0}, detail::sample(g, opt.profile), opt);
  }
  if (name == "torus_flat") {
    detail::require_periodic(g, name);
    io::require_keys(p, {}, "torus_flat params");
    opt.params = ordered_json::object();
    return make_metric(grid, {BaseTag::FlatTorus, 0.0}, Field::Ones(g.size()), opt);
  }
  if (name == "torus_negative") {
    detail::require_periodic(g, name);
    io::require_keys(p, {"A"}, "torus_negative params");
    const double A = detail::param(p, "A", 0.3);
    if (!(A > 0.0)) throw Error(ErrorCode::InvalidConfig, "torus_negative needs A > 0");
    opt.params = {{"A", A}};
    return make_metric(grid, {BaseTag::WarpedTorus, A}, Field::Ones(g.size()), opt);
  }
  throw Error(ErrorCode::UnknownName, "unknown metric '" + name + "'");
}

}  // namespace conflab::metrics
