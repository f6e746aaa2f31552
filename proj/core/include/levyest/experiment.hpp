#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "levyest/efficiency.hpp"
#include "levyest/estimators.hpp"

namespace levyest {

/// "L1", "L2", "Linf", "OS-<base>", "Rao-<base>".
struct EstimatorSpec {
  enum class Kind { Raw, OneStep, Rao };
  Kind kind = Kind::Raw;
  LossP base = LossP::L2;

  std::string name() const;
  static EstimatorSpec parse(const std::string& text);
};

/// Flat key/value experiment description with sections; see docs/config.md.
struct ExperimentConfig {
  // [drift]
  std::string drift_expr = "x";
  std::vector<std::string> param_names;
  std::vector<double> theta_true;

  // [noise]  (horizon is derived from h * n)
  NoiseConfig noise;
  bool eps_cut_given = false;

  // [sim]
  SimConfig sim;

  // [estimate]
  std::vector<EstimatorSpec> estimators;
  int repetitions = 1;
  std::vector<double> start;
  double bracket_radius = 3.0;
  double tol = 1e-8;

  // [solver]
  double ssor_omega = 1.2;
  double linear_tol = 1e-12;
  int linear_max_iter = 500;
  HybridOptions hybrid;
  double minimax_beta = 1e-2;
  ArmijoOptions armijo;

  // [onestep]
  OneStepOptions onestep;

  // [efficiency]
  int eff_trajectories = 100;
  int eff_n0 = 1;
  double eff_bridge_radius_factor = 0.1;
  std::vector<EstimatorSpec> eff_estimators;
  bool eff_dump_paths = false;

  // [bench]
  int bench_seeds = 20;

  // [run]
  std::uint64_t master_seed = 1;
  int workers = 1;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);
  std::string to_string() const;  // effective-config echo; reparses equal
  void validate() const;

  EstimateOptions estimate_options() const;
  double total_time() const { return sim.h * sim.n; }
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

// ---------------------------------------------------------------------------
// Experiment runners.  Each writes CSV outputs under out_dir and returns the
// data it wrote, so tests can assert on values without reparsing files.
// ---------------------------------------------------------------------------

struct SimulateOutput {
  std::vector<std::string> trajectory_files;
  std::vector<std::string> increment_files;
  std::vector<std::string> noise_files;
  std::string plot_script;  // empty unless requested
};

SimulateOutput cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                            bool emit_plot_script);

struct EstimateRun {
  int repetition = 0;
  std::string estimator;
  Eigen::VectorXd theta_hat;
  double loss = 0.0;
  long iterations = 0;
  long evaluations = 0;
  double wall_ms = 0.0;
  std::string error;  // empty on success
};

struct EstimateAggregate {
  std::string estimator;
  Eigen::VectorXd mean;
  double mad = 0.0;   // mean |dev|; vector case: max-abs component deviation
  double rmse = 0.0;  // sqrt(mean dev^2), same deviation convention
  int successes = 0;
  int failures = 0;
};

struct EstimateOutput {
  std::vector<EstimateRun> runs;
  std::vector<EstimateAggregate> aggregates;
};

EstimateOutput cmd_estimate(const ExperimentConfig& cfg, const std::string& out_dir,
                            bool write_timings = false);

struct EfficiencyRow {
  std::string estimator;
  EfficiencyReport report;
  SampleDiagnostics diagnostics;
};

std::vector<EfficiencyRow> cmd_efficiency(const ExperimentConfig& cfg,
                                          const std::string& out_dir);

struct BenchLinearRow {
  int seed_index = 0;
  std::string method;
  double omega = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double error_vs_direct = 0.0;
  Eigen::VectorXd solution;
  bool converged = false;
};

struct BenchSearchRow {
  int seed_index = 0;
  std::string method;
  Eigen::VectorXd solution;
  int rounds = 0;
  long evaluations = 0;
  long line_steps = 0;
  double loss = 0.0;
};

struct BenchOutput {
  std::vector<BenchLinearRow> linear;  // empty when the drift is not monomial
  std::vector<BenchSearchRow> search;
};

BenchOutput cmd_bench_solvers(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace levyest
