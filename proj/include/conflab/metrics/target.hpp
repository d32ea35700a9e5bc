#pragma once

#include <string>
#include <vector>

#include "conflab/metrics/catalog.hpp"

namespace conflab::metrics {

using domain::Region;

inline constexpr double kDefaultZeroTol = 1e-12;

struct CurvatureTarget {
  Field Rp;                 // prescribed curvature R' <= 0
  Region Z;                 // {R' = 0} under zero_tol
  double zero_tol = kDefaultZeroTol;
  std::string name = "custom";
  ordered_json params = ordered_json::object();
};

// Node i is in Z iff |R'_i| <= zero_tol * max|R'|.
inline Region zero_set(const GridPtr& grid, const Field& Rp, double zero_tol) {
  const Grid& g = *grid;
  const double scale = Rp.cwiseAbs().maxCoeff();
  auto is_zero = [&](Index i) { return std::fabs(Rp(i)) <= zero_tol * scale; };
  if (g.periodic()) {
    std::vector<char> m(static_cast<size_t>(g.size()));
    for (Index i = 0; i < g.size(); ++i) m[static_cast<size_t>(i)] = is_zero(i) ? 1 : 0;
    return domain::from_mask(grid, std::move(m));
  }
  domain::RadialUnion u;
  Index i = 0;
  while (i < g.size()) {
    if (!is_zero(i)) { ++i; continue; }
    Index j = i;
    while (j + 1 < g.size() && is_zero(j + 1)) ++j;
    u.parts.push_back(domain::Interval{g.r()(i), g.r()(j), true, true});
    i = j + 1;
  }
  return Region(grid, std::move(u));
}

inline CurvatureTarget make_target(const GridPtr& grid, Field Rp, double zero_tol = kDefaultZeroTol) {
  if (Rp.size() != grid->size()) throw Error(ErrorCode::InvalidConfig, "target length does not match grid");
  if (!Rp.allFinite()) throw Error(ErrorCode::InvalidConfig, "target must be finite");
  if (Rp.maxCoeff() > 0.0) throw Error(ErrorCode::InvalidConfig, "prescribed curvature must be non-positive");
  Region Z = zero_set(grid, Rp, zero_tol);
  return CurvatureTarget{std::move(Rp), std::move(Z), zero_tol};
}

inline const std::vector<std::string>& target_names() {
  static const std::vector<std::string> names{"zero", "gaussian", "shell", "ball_bump", "constant", "hole"};
  return names;
}

namespace detail {

// C^3 smoothstep on [0,1].
inline double smoothstep3(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t);
}

inline double bump4(double t) {
  if (std::fabs(t) >= 1.0) return 0.0;
  const double s = 1.0 - t * t;
  return s * s * s * s;
}

inline std::vector<double> center_param(const Grid& g, const ordered_json& p) {
  if (!p.contains("center")) return std::vector<double>(static_cast<size_t>(g.dim()), g.periodic() ? 0.5 * g.box_length() : 0.0);
  auto c = p.at("center").get<std::vector<double>>();
  if (static_cast<int>(c.size()) != g.dim()) throw Error(ErrorCode::InvalidConfig, "center has wrong dimension");
  return c;
}

inline Field distance_field(const Grid& g, const std::vector<double>& center) {
  if (g.radial()) return g.r();
  Field d(g.size());
  for (Index i = 0; i < g.size(); ++i) d(i) = domain::detail::periodic_distance(g, i, center);
  return d;
}

}  // namespace detail

inline CurvatureTarget target_catalog(const std::string& name, const GridPtr& grid, const ordered_json& params = ordered_json::object()) {
  const Grid& g = *grid;
  const ordered_json p = params.is_null() ? ordered_json::object() : params;
  Field Rp(g.size());
  ordered_json used = ordered_json::object();
  auto num = [&](const char* k, double fallback) {
    const double v = detail::param(p, k, fallback);
    used[k] = v;
    return v;
  };
  if (name == "zero") {
    io::require_keys(p, {}, "zero target");
    Rp.setZero();
  } else if (name == "gaussian") {
    io::require_keys(p, {"amplitude", "width", "center"}, "gaussian target");
    const double A = num("amplitude", 1.0), w = num("width", 1.0);
    const Field d = detail::distance_field(g, detail::center_param(g, p));
    for (Index i = 0; i < g.size(); ++i) Rp(i) = -A * std::exp(-(d(i) / w) * (d(i) / w));
  } else if (name == "shell") {
    io::require_keys(p, {"r_in", "r_out", "amplitude", "center"}, "shell target");
    const double a = num("r_in", 4.0), b = num("r_out", 8.0), A = num("amplitude", 1.0);
    if (!(b > a)) throw Error(ErrorCode::InvalidConfig, "shell needs r_out > r_in");
    const Field d = detail::distance_field(g, detail::center_param(g, p));
    for (Index i = 0; i < g.size(); ++i) Rp(i) = -A * detail::bump4((d(i) - 0.5 * (a + b)) / (0.5 * (b - a)));
  } else if (name == "ball_bump") {
    io::require_keys(p, {"radius", "amplitude", "center"}, "ball_bump target");
    const double rho = num("radius", 0.5), A = num("amplitude", 1.0);
    const Field d = detail::distance_field(g, detail::center_param(g, p));
    for (Index i = 0; i < g.size(); ++i) Rp(i) = -A * detail::bump4(d(i) / rho);
  } else if (name == "constant") {
    io::require_keys(p, {"value"}, "constant target");
    Rp.setConstant(num("value", -1.0));
  } else if (name == "hole") {
    io::require_keys(p, {"radius", "amplitude", "center"}, "hole target");
    const double rho = num("radius", 0.5), A = num("amplitude", 1.0);
    const Field d = detail::distance_field(g, detail::center_param(g, p));
    for (Index i = 0; i < g.size(); ++i) Rp(i) = -A * detail::smoothstep3((d(i) - rho) / rho);
  } else {
    throw Error(ErrorCode::UnknownName, "unknown target '" + name + "'");
  }
  if (p.contains("center")) used["center"] = p.at("center");
  for (Index i = 0; i < g.size(); ++i)
    if (Rp(i) == 0.0) Rp(i) = 0.0;  // normalise -0.0
  auto t = make_target(grid, std::move(Rp));
  t.name = name;
  t.params = used;
  return t;
}

}  // namespace conflab::metrics
