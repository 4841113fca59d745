// celsim: run FEL/CEL tracking experiments from a JSON config.
//
// Exit codes: 0 success, 1 config error, 2 divergence, 3 I/O error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cel/config.hpp"
#include "cel/errors.hpp"
#include "cel/experiment.hpp"
#include "cel/outputs.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDivergence = 2;
constexpr int kIoError = 3;

cel::RunSelection parse_controllers(const std::string& list) {
  cel::RunSelection sel{false, false, true};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "fel") {
      sel.fel = true;
    } else if (item == "cel") {
      sel.cel = true;
    } else {
      throw cel::ConfigError("--controllers: unknown controller '" + item + "'");
    }
  }
  if (!sel.fel && !sel.cel) throw cel::ConfigError("--controllers: nothing selected");
  return sel;
}

void report(const cel::ExperimentLog& log, double w_norm) {
  const std::size_t last = log.rows() - 1;
  const auto te = log.freeze_time();
  std::printf("%s: rows=%zu  T_e=%s  |W_tilde|/|W| final=%.4f\n", log.controller.c_str(),
              log.rows(), te ? std::to_string(*te).c_str() : "none",
              log.w_tilde_norm[last] / w_norm);
}

int run(const std::string& config_path, const std::string& out_dir,
        const std::string& controllers, const std::optional<std::uint64_t>& seed) {
  cel::ExperimentConfig cfg = cel::load_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (seed) cfg.seed = seed;
  const cel::ExperimentRuns runs = cel::run_experiment(cfg, parse_controllers(controllers));
  const double w_norm = cfg.model().true_parameters().norm();
  for (const cel::ExperimentLog* log : runs.logs()) report(*log, w_norm);
  for (const std::string& path : cel::emit_outputs(runs.logs(), cfg.output_dir)) {
    std::printf("wrote %s\n", path.c_str());
  }
  return kOk;
}

int summarize(const std::string& log_path) {
  const cel::ExperimentLog log = cel::read_log_csv_file(log_path);
  cel::write_summary_csv(std::cout, log.dof, cel::summarize(log));
  return kOk;
}

int validate(const std::string& config_path) {
  const cel::ExperimentConfig cfg = cel::load_config(config_path);
  std::printf("%s: ok (%d links, %zu tasks, %.3f s)\n", config_path.c_str(),
              static_cast<int>(cfg.links.size()), cfg.tasks.size(), cfg.sim.duration_s);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite versus feedback error learning on a planar arm"};
  app.require_subcommand(1);

  std::string config_path, out_dir, controllers = "fel,cel", log_path;
  std::optional<std::uint64_t> seed;

  CLI::App* run_cmd = app.add_subcommand("run", "Simulate and write CSV, summary and plots");
  run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run_cmd->add_option("--controllers", controllers, "Comma list of fel, cel");
  run_cmd->add_option("--seed", seed, "Seed for initial-state jitter");

  CLI::App* sum_cmd = app.add_subcommand("summarize", "Per-task e1/tau ranges of a log CSV");
  sum_cmd->add_option("log", log_path, "Log CSV written by run")->required();

  CLI::App* val_cmd = app.add_subcommand("validate", "Check a config without running it");
  val_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return run(config_path, out_dir, controllers, seed);
    if (*sum_cmd) return summarize(log_path);
    return validate(config_path);
  } catch (const cel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cel::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const cel::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const cel::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}
