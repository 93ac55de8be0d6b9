#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fploc/error.hpp"
#include "fploc/harness.hpp"

namespace {

struct Overrides
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<int> threads;
};

fploc::ExperimentConfig resolve(const Overrides& o)
{
  fploc::ExperimentConfig cfg = o.config.empty() ? fploc::ExperimentConfig{} : fploc::load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (o.runs) {
    cfg.n_runs = *o.runs;
  }
  if (o.out) {
    cfg.output_dir = *o.out;
  }
  if (o.data) {
    cfg.dataset_dir = *o.data;
  }
  if (o.threads) {
    cfg.threads = *o.threads;
  }
  cfg.validate();
  return cfg;
}

void simulate(const fploc::ExperimentConfig& cfg)
{
  const auto s = fploc::simulate_dataset(cfg);
  std::printf("dataset %s: %d poses, %.2f m path, %d masks\n", cfg.dataset_dir.string().c_str(), s.n_poses,
              s.path_length_m, s.n_masks);
}

void localize(const fploc::ExperimentConfig& cfg)
{
  const auto logs = fploc::run_experiment(cfg);
  std::printf("%zu run(s), %zu updates each, logs in %s\n", logs.size(), logs.front().records.size(),
              (cfg.output_dir / "runs").string().c_str());
}

void evaluate(const fploc::ExperimentConfig& cfg)
{
  const auto logs = fploc::load_run_logs(cfg.output_dir);
  const auto report = fploc::rmse(logs);
  fploc::emit_report(report, logs, cfg.output_dir);
  std::printf("linear RMSE  %.4f m", report.linear_rmse_m.mean);
  if (report.linear_rmse_m.std) {
    std::printf(" +- %.4f", *report.linear_rmse_m.std);
  }
  std::printf("\nangular RMSE %.3f deg", report.angular_rmse_deg.mean);
  if (report.angular_rmse_deg.std) {
    std::printf(" +- %.3f", *report.angular_rmse_deg.std);
  }
  std::printf("\n");
  if (report.odometry_linear_rmse_m) {
    std::printf("odometry     %.4f m, %.3f deg\n", *report.odometry_linear_rmse_m, *report.odometry_angular_rmse_deg);
  }
  std::printf("report: %s\n", (cfg.output_dir / "report.json").string().c_str());
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Floor-plan localization with layout-edge measurements"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "JSON experiment config (defaults apply to missing keys)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "base seed");
  app.add_option("--runs", o.runs, "number of filter runs");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--data", o.data, "dataset directory");
  app.add_option("--threads", o.threads, "worker threads (0 = automatic)");

  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  auto* loc_cmd = app.add_subcommand("localize", "run the filter on a dataset");
  auto* eval_cmd = app.add_subcommand("evaluate", "compute metrics from run logs and write the report");
  auto* all_cmd = app.add_subcommand("all", "simulate, localize and evaluate");
  auto* cfg_cmd = app.add_subcommand("config", "print the effective config as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    const fploc::ExperimentConfig cfg = resolve(o);
    if (*cfg_cmd) {
      std::cout << fploc::dump_config(cfg);
    } else if (*sim_cmd) {
      simulate(cfg);
    } else if (*loc_cmd) {
      localize(cfg);
    } else if (*eval_cmd) {
      evaluate(cfg);
    } else if (*all_cmd) {
      simulate(cfg);
      localize(cfg);
      evaluate(cfg);
    }
  } catch (const fploc::Error& e) {
    std::fprintf(stderr, "fploc: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fploc: unexpected error: %s\n", e.what());
    return 2;
  }
  return 0;
}
