#pragma once

#include <string>

#include "conflab/metrics/catalog.hpp"

namespace conflab::metrics {

struct MetricFiles {
  std::string header;  // JSON
  std::string table;   // CSV: index, coordinates, psi, R
};

inline MetricFiles serialize_metric(const ConformalMetric& g, const std::string& tag = "metric") {
  ordered_json h;
  h["format"] = tag;
  h["version"] = io::kFormatVersion;
  h["name"] = g.name;
  h["base"] = to_string(g.base.tag);
  h["warp"] = g.base.warp;
  h["params"] = g.params;
  h["tau"] = g.tau;
  h["n"] = g.grid->dim();
  h["rho"] = g.grid->radial() ? "sqrt(1+r^2)" : "1";
  h["grid"] = io::grid_to_json(g.grid->config());
  const auto t = io::field_table(*g.grid, {{"psi", &g.psi}, {"R", &g.R}});
  return {h.dump(2) + "\n", t.str()};
}

inline void write_metric(const ConformalMetric& g, const io::fs::path& json_path, const io::fs::path& csv_path) {
  const auto f = serialize_metric(g);
  io::atomic_write(csv_path, f.table);
  io::atomic_write(json_path, f.header);
}

// Rebuilds the grid from the header and recomputes R from the stored psi.
inline ConformalMetric parse_metric(const std::string& header, const std::string& table) {
  const auto h = ordered_json::parse(header);
  auto grid = domain::build_grid(io::grid_from_json(h.at("grid")));
  const auto t = io::parse_csv(table);
  Field psi = io::column_field(t, "psi");
  MetricOptions opt;
  opt.check_decay = false;
  opt.name = h.value("name", std::string("custom"));
  opt.params = h.value("params", ordered_json::object());
  opt.tau = h.value("tau", 0.0);
  BaseSpec base{base_from_string(h.at("base").get<std::string>()), h.value("warp", 0.0)};
  return make_metric(grid, base, std::move(psi), opt);
}

inline ConformalMetric read_metric(const io::fs::path& json_path, const io::fs::path& csv_path) {
  return parse_metric(io::read_file(json_path), io::read_file(csv_path));
}

}  // namespace conflab::metrics
