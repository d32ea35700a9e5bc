#include <CLI11.hpp>
#include <iostream>

#include "conflab/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"conflab: conformal invariants and prescribed scalar curvature"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
  bool seed_given = false;
  for (const auto& name : conflab::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config.output)");
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
      seed = s;
      seed_given = true;
    }, "random seed (overrides config.seed)");
    sub->add_option("--threads", threads, "worker threads for sweep")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "suppress progress lines");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : conflab::cli::kConfigError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  conflab::cli::ExperimentConfig cfg;
  try {
    cfg = conflab::cli::parse_config(conflab::io::read_file(config_path));
  } catch (const conflab::Error& e) {
    std::cerr << cmd << ": " << e.what() << "\n";
    return conflab::cli::kConfigError;
  }
  conflab::cli::RunOptions run;
  run.out = out_dir.empty() ? cfg.output : out_dir;
  run.seed = seed_given ? seed : cfg.seed;
  run.threads = threads;
  run.quiet = quiet;
  return conflab::cli::run_command(cmd, cfg, run);
}
