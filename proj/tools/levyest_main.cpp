// Experiment runner for drift estimation in jump-noise SDE models.
//
// Subcommands: simulate | estimate | efficiency | bench-solvers.
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "levyest/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (INI)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "master seed override")
      ->each([&args](const std::string&) { args.seed_given = true; });
  cmd->add_option("--workers", args.workers, "worker thread count override");
}

levyest::ExperimentConfig load(const CommonArgs& args) {
  levyest::ExperimentConfig cfg = levyest::ExperimentConfig::from_file(args.config_path);
  if (args.seed_given) cfg.master_seed = args.seed;
  if (args.workers > 0) cfg.workers = args.workers;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"levyest: drift estimation for SDEs driven by truncated "
               "alpha-stable jump noise"};
  app.require_subcommand(1);

  CommonArgs sim_args, est_args, eff_args, bench_args;
  bool emit_plot = false;
  bool timings = false;

  CLI::App* sim = app.add_subcommand("simulate", "simulate trajectories and write CSVs");
  add_common(sim, sim_args);
  sim->add_flag("--emit-plot-script", emit_plot, "write a gnuplot script");

  CLI::App* est = app.add_subcommand("estimate", "run estimators over repetitions");
  add_common(est, est_args);
  est->add_flag("--timings", timings, "write wall times to a separate timings.csv");

  CLI::App* eff = app.add_subcommand("efficiency", "run the efficiency check");
  add_common(eff, eff_args);

  CLI::App* bench =
      app.add_subcommand("bench-solvers", "compare linear and search solvers");
  add_common(bench, bench_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      levyest::cmd_simulate(load(sim_args), sim_args.out_dir, emit_plot);
    } else if (est->parsed()) {
      auto out = levyest::cmd_estimate(load(est_args), est_args.out_dir, timings);
      for (const auto& agg : out.aggregates) {
        std::printf("%-10s successes=%d failures=%d mad=%.6g rmse=%.6g mean=",
                    agg.estimator.c_str(), agg.successes, agg.failures, agg.mad,
                    agg.rmse);
        for (int j = 0; j < agg.mean.size(); ++j)
          std::printf("%s%.6g", j ? "," : "", agg.mean[j]);
        std::printf("\n");
      }
    } else if (eff->parsed()) {
      auto rows = levyest::cmd_efficiency(load(eff_args), eff_args.out_dir);
      for (const auto& row : rows)
        std::printf("%-10s raw=%.6g reciprocal=%.6g acceptance=%.3f\n",
                    row.estimator.c_str(), row.report.raw_value,
                    row.report.reciprocal, row.report.acceptance_rate);
    } else if (bench->parsed()) {
      auto out = levyest::cmd_bench_solvers(load(bench_args), bench_args.out_dir);
      for (const auto& row : out.linear)
        std::printf("seed=%d %-14s omega=%.1f iters=%d err=%.3g\n", row.seed_index,
                    row.method.c_str(), row.omega, row.iterations,
                    row.error_vs_direct);
      for (const auto& row : out.search)
        std::printf("seed=%d %-14s rounds=%d evals=%ld loss=%.6g\n", row.seed_index,
                    row.method.c_str(), row.rounds, row.evaluations, row.loss);
    }
  } catch (const levyest::validation_error& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
