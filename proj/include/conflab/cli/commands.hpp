#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>

#include "conflab/cli/config.hpp"
#include "conflab/compactify/kelvin.hpp"
#include "conflab/metrics/catalog.hpp"
#include "conflab/prescribe/pipeline.hpp"

namespace conflab::cli {

using domain::Field;
using domain::Index;

enum ExitCode : int { kOk = 0, kConfigError = 1, kNoConvergence = 2, kInconsistent = 3 };

struct RunOptions {
  io::fs::path out = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
};

namespace detail {

inline ordered_json header(const std::string& format, const ExperimentConfig& c, const RunOptions& run) {
  ordered_json h;
  h["format"] = format;
  h["version"] = io::kFormatVersion;
  h["seed"] = run.seed;
  h["config"] = to_json(c);
  return h;
}

inline ordered_json spectral_json(const spectral::SpectralResult& r) {
  return {{"delta", r.delta},
          {"lambda", io::json_number(r.lambda)},
          {"lower_bound", io::json_number(r.lower_bound)},
          {"infinite", r.infinite},
          {"converged", r.converged},
          {"certified", r.certified},
          {"iterations", r.iterations},
          {"residual", io::json_number(r.residual)}};
}

inline ordered_json yamabe_json(const spectral::YamabeEstimate& y) {
  return {{"y", io::json_number(y.y_value)},
          {"recomputed", io::json_number(y.recomputed)},
          {"infinite", y.infinite},
          {"stationarity", io::json_number(y.stationarity)},
          {"stationary", y.stationary},
          {"stalled", y.stalled},
          {"resolution_limited", y.resolution_limited},
          {"iterations", y.iterations},
          {"schedule", y.schedule}};
}

inline spectral::ClassifyOptions classify_options(const ExperimentConfig& c, const RunOptions& run) {
  spectral::ClassifyOptions o;
  o.eigen.tol = c.tolerances.solver;
  o.eigen.seed = run.seed;
  o.null_band = c.tolerances.null_band;
  return o;
}

inline prescribe::PipelineOptions pipeline_options(const ExperimentConfig& c, const RunOptions& run) {
  prescribe::PipelineOptions o;
  o.q_schedule = c.q_schedule;
  o.deltas = c.deltas;
  o.tol = c.tolerances.solver;
  o.stage_tol = c.tolerances.solver;
  o.blowup_threshold = c.tolerances.blowup_threshold;
  o.classify = classify_options(c, run);
  return o;
}

inline io::CsvTable trace_table(const std::vector<prescribe::TraceRow>& rows) {
  io::CsvTable t;
  t.header = {"stage", "q", "iteration", "value", "gradient_norm", "residual", "sup_u", "norm_2delta"};
  for (const auto& r : rows)
    t.rows.push_back({r.stage, io::fmt_double(r.q), std::to_string(r.iteration), io::fmt_double(r.value),
                      io::fmt_double(r.gradient_norm), io::fmt_double(r.residual), io::fmt_double(r.sup_u),
                      io::fmt_double(r.norm_2delta)});
  return t;
}

inline io::CsvTable stage_table(const std::vector<prescribe::StageSummary>& stages) {
  io::CsvTable t;
  t.header = {"stage", "q", "F", "F_zero", "sup_u", "norm_2delta", "el_residual", "iterations", "accepted"};
  for (size_t k = 0; k < stages.size(); ++k) {
    const auto& s = stages[k];
    t.rows.push_back({std::to_string(k), io::fmt_double(s.q), io::fmt_double(s.F), io::fmt_double(s.F_zero),
                      io::fmt_double(s.sup_u), io::fmt_double(s.norm_2delta), io::fmt_double(s.el_residual),
                      std::to_string(s.iterations), s.accepted ? "1" : "0"});
  }
  return t;
}

// Length of the strictly increasing run of stage-end sup|u| ending at the last stage.
inline int growth_run(const std::vector<prescribe::StageSummary>& stages) {
  if (stages.empty()) return 0;
  int run = 1;
  for (size_t k = stages.size() - 1; k > 0 && stages[k].sup_u > stages[k - 1].sup_u; --k) ++run;
  return run;
}

inline ordered_json solve_json(const prescribe::SolveResult& r) {
  ordered_json j;
  j["status"] = prescribe::to_string(r.status);
  j["verdict"] = r.has_verdict ? spectral::to_string(r.verdict) : "none";
  j["inconsistent"] = r.inconsistent;
  j["residual"] = io::json_number(r.residual);
  j["tolerance"] = io::json_number(r.tolerance);
  j["curvature_error"] = io::json_number(r.curvature_error);
  j["delta"] = r.delta;
  j["message"] = r.message;
  j["notes"] = r.notes;
  ordered_json sup = ordered_json::array();
  for (const auto& s : r.stages) sup.push_back(io::json_number(s.sup_u));
  j["stage_sup_u"] = sup;
  return j;
}

struct Output {
  io::fs::path path;
  std::string content;
};

// Everything is computed before anything is written.
inline void commit(const io::fs::path& dir, const std::vector<Output>& files) {
  std::error_code ec;
  io::fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& f : files) io::atomic_write(dir / f.path, f.content);
}

inline void say(const RunOptions& run, const std::string& line) {
  if (!run.quiet) std::cout << line << "\n";
}

}  // namespace detail

inline int cmd_eigen(const ExperimentConfig& c, const RunOptions& run) {
  const auto grid = domain::build_grid(c.grid);
  const auto g = metrics::catalog(c.metric.name, grid, c.metric.params);
  const auto V = build_region(grid, c.region);
  spectral::EigenOptions eo;
  eo.tol = c.tolerances.solver;
  eo.seed = run.seed;
  const auto r = spectral::lambda_delta(g, V, c.delta, eo);
  auto h = detail::header("eigen", c, run);
  h["result"] = detail::spectral_json(r);
  const Field u = r.eigenfunction.size() == grid->size() ? r.eigenfunction : Field::Zero(grid->size());
  Field ind = Field::Zero(grid->size());
  const auto mask = V.indicator();
  for (Index i = 0; i < grid->size(); ++i) ind(i) = mask[static_cast<size_t>(i)] ? 1.0 : 0.0;
  detail::commit(run.out, {{"eigen.json", h.dump(2) + "\n"},
                           {"eigenfunction.csv", io::field_table(*grid, {{"u", &u}, {"region", &ind}}).str()}});
  detail::say(run, "lambda = " + io::fmt_double(r.lambda) + (r.converged || r.infinite ? "" : " (not converged)"));
  return r.converged || r.infinite ? kOk : kNoConvergence;
}

inline int cmd_yamabe(const ExperimentConfig& c, const RunOptions& run) {
  const auto grid = domain::build_grid(c.grid);
  const auto g = metrics::catalog(c.metric.name, grid, c.metric.params);
  const auto V = build_region(grid, c.region);
  spectral::YamabeOptions yo;
  if (c.delta > g.c.delta_star) yo.delta = c.delta;
  const auto y = spectral::yamabe_invariant(g, V, yo);
  auto h = detail::header("yamabe", c, run);
  h["result"] = detail::yamabe_json(y);
  io::CsvTable t;
  t.header = {"iteration", "q", "value", "stationarity", "step"};
  for (const auto& row : y.trace)
    t.rows.push_back({std::to_string(row.iteration), io::fmt_double(row.q), io::fmt_double(row.value),
                      io::fmt_double(row.stationarity), io::fmt_double(row.step)});
  const Field u = y.minimizer.size() == grid->size() ? y.minimizer : Field::Zero(grid->size());
  detail::commit(run.out, {{"yamabe.json", h.dump(2) + "\n"},
                           {"yamabe_trace.csv", t.str()},
                           {"minimizer.csv", io::field_table(*grid, {{"u", &u}}).str()}});
  detail::say(run, "y = " + io::fmt_double(y.y_value));
  return y.stationary || y.infinite || y.resolution_limited ? kOk : kNoConvergence;
}

inline int cmd_classify(const ExperimentConfig& c, const RunOptions& run) {
  const auto grid = domain::build_grid(c.grid);
  const auto g = metrics::catalog(c.metric.name, grid, c.metric.params);
  const auto V = build_region(grid, c.region);
  const auto deltas = c.deltas.empty() ? spectral::default_deltas(grid->dim()) : c.deltas;
  auto h = detail::header("classify", c, run);
  int code = kOk;
  try {
    const auto v = spectral::classify_sign(g, V, deltas, detail::classify_options(c, run));
    h["verdict"] = spectral::to_string(v.verdict);
    h["null_band"] = v.null_band;
    ordered_json lams = ordered_json::array();
    for (const auto& r : v.lambdas) lams.push_back(detail::spectral_json(r));
    h["lambdas"] = lams;
    if (v.has_yamabe) h["yamabe"] = detail::yamabe_json(v.yamabe);
    detail::say(run, std::string("verdict ") + spectral::to_string(v.verdict));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Inconsistent) throw;
    h["verdict"] = "Inconsistent";
    h["message"] = e.what();
    code = kInconsistent;
    std::cerr << "classify: " << e.what() << "\n";
  }
  detail::commit(run.out, {{"classify.json", h.dump(2) + "\n"}});
  return code;
}

inline int cmd_prescribe(const ExperimentConfig& c, const RunOptions& run) {
  const auto grid = domain::build_grid(c.grid);
  const auto g = metrics::catalog(c.metric.name, grid, c.metric.params);
  const auto target = metrics::target_catalog(c.target.name, grid, c.target.params);
  const auto r = prescribe::prescribe_curvature(g, target, detail::pipeline_options(c, run));
  auto h = detail::header("prescribe", c, run);
  h["result"] = detail::solve_json(r);
  const Field phi = r.phi.size() == grid->size() ? r.phi : Field::Ones(grid->size());
  detail::commit(run.out, {{"prescribe.json", h.dump(2) + "\n"},
                           {"trace.csv", detail::trace_table(r.trace).str()},
                           {"stages.csv", detail::stage_table(r.stages).str()},
                           {"phi.csv", io::field_table(*grid, {{"phi", &phi}, {"Rp", &target.Rp}}).str()}});
  detail::say(run, std::string(prescribe::to_string(r.status)) + " (zero set " +
                       (r.has_verdict ? spectral::to_string(r.verdict) : "unclassified") + ")");
  if (r.inconsistent) {
    std::cerr << "prescribe: outcome " << prescribe::to_string(r.status) << " contradicts the zero-set verdict\n";
    return kInconsistent;
  }
  return kOk;
}

inline int cmd_compactify(const ExperimentConfig& c, const RunOptions& run) {
  const auto grid = domain::build_grid(c.grid);
  const auto g = metrics::catalog(c.metric.name, grid, c.metric.params);
  compactify::ChartOptions co;
  co.r_min = c.chart.r_min;
  co.nodes = c.chart.nodes;
  const auto chart = compactify::kelvin_compactify(g, co);
  const auto reg = compactify::regularity_check(chart, c.chart.p);
  const auto back = compactify::decompactify(chart, grid, c.chart.p, &g);
  double round_trip = 0.0;
  for (Index i = back.first_covered; i < grid->size(); ++i)
    round_trip = std::max(round_trip, std::fabs(back.metric.psi(i) - g.psi(i)));
  const auto files = compactify::serialize_chart(chart);
  auto h = detail::header("compactify", c, run);
  h["regularity"] = compactify::regularity_to_json(reg);
  h["round_trip_max_error"] = io::json_number(round_trip);
  h["tau"] = back.tau;
  const auto cls = detail::classify_options(c, run);
  auto verdict = [&](auto&& fn) -> std::string {
    try {
      return spectral::to_string(fn().verdict);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Inconsistent) throw;
      return "Inconsistent";
    }
  };
  const std::string ae = verdict([&] {
    return spectral::classify_sign(g, domain::whole(grid), c.deltas.empty() ? spectral::default_deltas(grid->dim()) : c.deltas, cls);
  });
  compactify::CompactVerdictOptions cvo;
  cvo.classify = cls;
  const std::string compact = verdict([&] { return compactify::compact_verdict(g, cvo); });
  h["ae_verdict"] = ae;
  h["compact_verdict"] = compact;
  detail::commit(run.out, {{"chart.json", files.header}, {"chart.csv", files.table}, {"regularity.json", h.dump(2) + "\n"}});
  detail::say(run, "AE " + ae + ", compact " + compact);
  return ae == compact && ae != "Inconsistent" ? kOk : kInconsistent;
}

struct SweepRow {
  std::string metric, metric_params, target, target_params;
  prescribe::SolveResult result;
  std::string error;
};

inline io::CsvTable sweep_table(const std::vector<SweepRow>& rows) {
  io::CsvTable t;
  t.header = {"case",      "metric",          "metric_params", "target",     "target_params", "verdict",
              "status",    "residual",        "tolerance",     "curvature_error", "stages",   "sup_u_first",
              "sup_u_last", "sup_u_max",      "growth_stages", "inconsistent", "error"};
  for (size_t k = 0; k < rows.size(); ++k) {
    const auto& w = rows[k];
    const auto& r = w.result;
    double first = 0.0, last = 0.0, mx = 0.0;
    if (!r.stages.empty()) {
      first = r.stages.front().sup_u;
      last = r.stages.back().sup_u;
      for (const auto& s : r.stages) mx = std::max(mx, s.sup_u);
    }
    const bool ok = w.error.empty();
    t.rows.push_back({std::to_string(k), w.metric, w.metric_params, w.target,
                      w.target_params, ok && r.has_verdict ? spectral::to_string(r.verdict) : "none",
                      ok ? prescribe::to_string(r.status) : "Error", io::fmt_double(r.residual), io::fmt_double(r.tolerance),
                      io::fmt_double(r.curvature_error), std::to_string(r.stages.size()), io::fmt_double(first),
                      io::fmt_double(last), io::fmt_double(mx), std::to_string(detail::growth_run(r.stages)),
                      r.inconsistent ? "1" : "0", w.error});
  }
  return t;
}

inline int cmd_sweep(const ExperimentConfig& c, const RunOptions& run) {
  const auto grid = domain::build_grid(c.grid);
  const auto metrics_list = c.sweep_metrics.empty() ? std::vector<NamedSpec>{c.metric} : c.sweep_metrics;
  const auto targets_list = c.sweep_targets.empty() ? std::vector<NamedSpec>{c.target} : c.sweep_targets;
  // Catalog lookups fail fast, before any case runs.
  for (const auto& m : metrics_list) (void)metrics::catalog(m.name, grid, m.params);
  for (const auto& t : targets_list) (void)metrics::target_catalog(t.name, grid, t.params);

  std::vector<SweepRow> rows;
  for (const auto& m : metrics_list)
    for (const auto& t : targets_list) rows.push_back({m.name, m.params.dump(), t.name, t.params.dump(), {}, {}});
  const auto po = detail::pipeline_options(c, run);
  std::atomic<size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (size_t k = next++; k < rows.size(); k = next++) {
      auto& w = rows[k];
      const auto& m = metrics_list[k / targets_list.size()];
      const auto& t = targets_list[k % targets_list.size()];
      try {
        const auto g = metrics::catalog(m.name, grid, m.params);
        const auto target = metrics::target_catalog(t.name, grid, t.params);
        w.result = prescribe::prescribe_curvature(g, target, po);
      } catch (const Error& e) {
        w.error = e.what();
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      detail::say(run, "case " + std::to_string(k) + " " + w.metric + " x " + w.target + ": " +
                           (w.error.empty() ? prescribe::to_string(w.result.status) : "error: " + w.error));
    }
  };
  const int nt = std::max(1, std::min<int>(run.threads, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<detail::Output> files{{"sweep.csv", sweep_table(rows).str()}};
  bool inconsistent = false;
  for (size_t k = 0; k < rows.size(); ++k) {
    inconsistent = inconsistent || rows[k].result.inconsistent;
    ordered_json j;
    j["format"] = "sweep_case";
    j["version"] = io::kFormatVersion;
    j["seed"] = run.seed;
    j["case"] = k;
    j["metric"] = {{"name", rows[k].metric}, {"params", ordered_json::parse(rows[k].metric_params)}};
    j["target"] = {{"name", rows[k].target}, {"params", ordered_json::parse(rows[k].target_params)}};
    if (rows[k].error.empty()) j["result"] = detail::solve_json(rows[k].result);
    else j["error"] = rows[k].error;
    files.push_back({"case_" + std::to_string(k) + ".json", j.dump(2) + "\n"});
  }
  auto h = detail::header("sweep", c, run);
  h["cases"] = rows.size();
  h["inconsistent"] = inconsistent;
  files.push_back({"sweep.json", h.dump(2) + "\n"});
  detail::commit(run.out, files);
  if (inconsistent) {
    std::cerr << "sweep: at least one case contradicts its zero-set verdict\n";
    return kInconsistent;
  }
  return kOk;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n{"eigen", "yamabe", "classify", "prescribe", "compactify", "sweep"};
  return n;
}

// Errors in the config or the catalog exit 1 with a message; nothing is written in that case.
inline int run_command(const std::string& cmd, const ExperimentConfig& c, const RunOptions& run) {
  try {
    if (cmd == "eigen") return cmd_eigen(c, run);
    if (cmd == "yamabe") return cmd_yamabe(c, run);
    if (cmd == "classify") return cmd_classify(c, run);
    if (cmd == "prescribe") return cmd_prescribe(c, run);
    if (cmd == "compactify") return cmd_compactify(c, run);
    if (cmd == "sweep") return cmd_sweep(c, run);
    std::cerr << "unknown command '" << cmd << "'\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << cmd << ": " << e.what() << "\n";
    if (e.code() == ErrorCode::NoConvergence || e.code() == ErrorCode::LineSearchStall) return kNoConvergence;
    if (e.code() == ErrorCode::InconsistentOutcome || e.code() == ErrorCode::Inconsistent) return kInconsistent;
    return kConfigError;
  }
}

}  // namespace conflab::cli
