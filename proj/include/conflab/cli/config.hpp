#pragma once

#include <string>
#include <vector>

#include "conflab/domain/io.hpp"
#include "conflab/domain/region.hpp"

namespace conflab::cli {

using io::ordered_json;

struct NamedSpec {
  std::string name;
  ordered_json params = ordered_json::object();
};

// kind: whole | empty | ball | annulus | exterior; "minus" lists regions to subtract.
struct RegionSpec {
  std::string kind = "whole";
  double radius = 1.0;
  double inner = 1.0;
  double outer = 2.0;
  std::vector<double> center;
  std::vector<RegionSpec> minus;
};

struct Tolerances {
  double solver = 1e-8;
  double null_band = 0.0;  // 0: automatic
  double blowup_threshold = 1e3;
};

struct ChartSpec {
  double r_min = 1.0;
  int nodes = 2001;
  double p = 2.5;
};

struct ExperimentConfig {
  domain::GridConfig grid;
  NamedSpec metric{"euclidean", ordered_json::object()};
  RegionSpec region;
  std::vector<double> deltas;  // empty: defaults
  double delta = 0.0;
  NamedSpec target{"zero", ordered_json::object()};
  std::vector<double> q_schedule;  // empty: defaults
  Tolerances tolerances;
  ChartSpec chart;
  std::vector<NamedSpec> sweep_metrics;
  std::vector<NamedSpec> sweep_targets;
  std::string output = "out";
  std::uint64_t seed = 0;
};

namespace detail {

inline ordered_json named_to_json(const NamedSpec& s) { return {{"name", s.name}, {"params", s.params}}; }

inline NamedSpec named_from_json(const ordered_json& j, const std::string& where) {
  io::require_keys(j, {"name", "params"}, where);
  NamedSpec s;
  s.name = j.at("name").get<std::string>();
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw Error(ErrorCode::InvalidConfig, where + ".params must be an object");
    s.params = j.at("params");
  }
  return s;
}

inline ordered_json region_to_json(const RegionSpec& r) {
  ordered_json j;
  j["kind"] = r.kind;
  if (r.kind == "ball") j["radius"] = r.radius;
  if (r.kind == "exterior") j["radius"] = r.radius;
  if (r.kind == "annulus") {
    j["inner"] = r.inner;
    j["outer"] = r.outer;
  }
  if (!r.center.empty()) j["center"] = r.center;
  if (!r.minus.empty()) {
    j["minus"] = ordered_json::array();
    for (const auto& m : r.minus) j["minus"].push_back(region_to_json(m));
  }
  return j;
}

inline RegionSpec region_from_json(const ordered_json& j) {
  io::require_keys(j, {"kind", "radius", "inner", "outer", "center", "minus"}, "region");
  RegionSpec r;
  r.kind = j.value("kind", std::string("whole"));
  static const std::set<std::string> kinds{"whole", "empty", "ball", "annulus", "exterior"};
  if (!kinds.count(r.kind)) throw Error(ErrorCode::InvalidConfig, "unknown region kind '" + r.kind + "'");
  r.radius = j.value("radius", r.radius);
  r.inner = j.value("inner", r.inner);
  r.outer = j.value("outer", r.outer);
  if (j.contains("center")) r.center = j.at("center").get<std::vector<double>>();
  if (j.contains("minus"))
    for (const auto& m : j.at("minus")) r.minus.push_back(region_from_json(m));
  return r;
}

}  // namespace detail

inline ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["grid"] = io::grid_to_json(c.grid);
  j["metric"] = detail::named_to_json(c.metric);
  j["region"] = detail::region_to_json(c.region);
  j["deltas"] = c.deltas;
  j["delta"] = c.delta;
  j["target"] = detail::named_to_json(c.target);
  j["q_schedule"] = c.q_schedule;
  j["tolerances"] = {{"solver", c.tolerances.solver},
                     {"null_band", c.tolerances.null_band},
                     {"blowup_threshold", c.tolerances.blowup_threshold}};
  j["chart"] = {{"r_min", c.chart.r_min}, {"nodes", c.chart.nodes}, {"p", c.chart.p}};
  ordered_json sm = ordered_json::array(), st = ordered_json::array();
  for (const auto& m : c.sweep_metrics) sm.push_back(detail::named_to_json(m));
  for (const auto& t : c.sweep_targets) st.push_back(detail::named_to_json(t));
  j["sweep"] = {{"metrics", sm}, {"targets", st}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  return j;
}

inline ExperimentConfig from_json(const ordered_json& j) {
  ExperimentConfig c;
  try {
    io::require_keys(j, {"grid", "metric", "region", "deltas", "delta", "target", "q_schedule", "tolerances", "chart", "sweep",
                         "output", "seed"},
                     "config");
    if (j.contains("grid")) c.grid = io::grid_from_json(j.at("grid"));
    if (j.contains("metric")) c.metric = detail::named_from_json(j.at("metric"), "metric");
    if (j.contains("region")) c.region = detail::region_from_json(j.at("region"));
    if (j.contains("deltas")) c.deltas = j.at("deltas").get<std::vector<double>>();
    c.delta = j.value("delta", c.delta);
    if (j.contains("target")) c.target = detail::named_from_json(j.at("target"), "target");
    if (j.contains("q_schedule")) c.q_schedule = j.at("q_schedule").get<std::vector<double>>();
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      io::require_keys(t, {"solver", "null_band", "blowup_threshold"}, "tolerances");
      c.tolerances.solver = t.value("solver", c.tolerances.solver);
      c.tolerances.null_band = t.value("null_band", c.tolerances.null_band);
      c.tolerances.blowup_threshold = t.value("blowup_threshold", c.tolerances.blowup_threshold);
    }
    if (j.contains("chart")) {
      const auto& t = j.at("chart");
      io::require_keys(t, {"r_min", "nodes", "p"}, "chart");
      c.chart.r_min = t.value("r_min", c.chart.r_min);
      c.chart.nodes = t.value("nodes", c.chart.nodes);
      c.chart.p = t.value("p", c.chart.p);
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      io::require_keys(s, {"metrics", "targets"}, "sweep");
      if (s.contains("metrics"))
        for (const auto& m : s.at("metrics")) c.sweep_metrics.push_back(detail::named_from_json(m, "sweep.metrics[]"));
      if (s.contains("targets"))
        for (const auto& t : s.at("targets")) c.sweep_targets.push_back(detail::named_from_json(t, "sweep.targets[]"));
    }
    c.output = j.value("output", c.output);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (!(c.tolerances.solver > 0.0) || !(c.tolerances.blowup_threshold > 0.0) || !(c.tolerances.null_band >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "tolerances must be positive (null_band 0 selects the automatic band)");
  if (c.chart.nodes < 8 || !(c.chart.r_min > 0.0)) throw Error(ErrorCode::InvalidConfig, "chart needs nodes >= 8 and r_min > 0");
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

inline domain::Region build_region(const domain::GridPtr& g, const RegionSpec& r) {
  domain::Region V = domain::whole(g);
  if (r.kind == "empty") V = domain::empty_region(g);
  else if (r.kind == "ball") V = domain::ball(g, r.radius, r.center);
  else if (r.kind == "annulus") V = domain::annulus(g, r.inner, r.outer, r.center);
  else if (r.kind == "exterior") V = domain::exterior(g, r.radius, r.center);
  for (const auto& m : r.minus) V = domain::subtract(V, build_region(g, m));
  return V;
}

}  // namespace conflab::cli
