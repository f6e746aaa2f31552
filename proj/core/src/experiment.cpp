#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "levyest/csv.hpp"
#include "levyest/experiment.hpp"
#include "levyest/parallel.hpp"

namespace levyest {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw error("cannot create output directory '" + dir + "'");
}

std::uint64_t estimator_tag(const EstimatorSpec& spec) {
  return stream_tag(spec.name());
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Per-repetition estimator driver with shared bridge passes for OS/Rao
/// pairs on the same pilot.
class RepetitionRunner {
public:
  RepetitionRunner(const ExperimentConfig& cfg, const DriftModel& model,
                   const Trajectory& traj, std::uint64_t rep_seed)
      : cfg_(cfg), model_(model), traj_(traj), rep_seed_(rep_seed) {}

  EstimationResult run(const EstimatorSpec& spec) {
    if (spec.kind == EstimatorSpec::Kind::Raw) return pilot(spec.base);
    const OneStepOutput& pair = bridge_pass(spec.base);
    return spec.kind == EstimatorSpec::Kind::OneStep ? pair.newton : pair.rao;
  }

private:
  EstimationResult pilot(LossP p) {
    auto it = pilots_.find(p);
    if (it != pilots_.end()) return it->second;
    EstimateOptions opts = cfg_.estimate_options();
    EstimationResult res = estimate_lp(traj_, model_, p, opts);
    pilots_.emplace(p, res);
    return res;
  }

  const OneStepOutput& bridge_pass(LossP base) {
    auto it = passes_.find(base);
    if (it != passes_.end()) return it->second;
    EstimationResult start = pilot(base);
    OneStepOptions opts = cfg_.onestep;
    // keyed by repetition and pilot only, so the estimator list does not
    // perturb existing streams
    opts.seed = derive_seed(rep_seed_, {stream_tag("one-step"),
                                        stream_tag(loss_name(base))});
    return passes_.emplace(base, one_step_both(start.theta_hat, traj_, model_,
                                               base, opts))
        .first->second;
  }

  const ExperimentConfig& cfg_;
  const DriftModel& model_;
  const Trajectory& traj_;
  std::uint64_t rep_seed_;
  std::map<LossP, EstimationResult> pilots_;
  std::map<LossP, OneStepOutput> passes_;
};

Trajectory simulate_repetition(const ExperimentConfig& cfg, const DriftModel& model,
                               int rep) {
  NoiseConfig nc = cfg.noise;
  nc.horizon = cfg.total_time();
  NoisePath noise = sample_path(
      nc, derive_seed(cfg.master_seed,
                      {stream_tag("sim-path"), static_cast<std::uint64_t>(rep)}));
  std::span<const double> theta(cfg.theta_true.data(), cfg.theta_true.size());
  return euler_simulate(model, theta, noise, cfg.sim);
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

SimulateOutput cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                            bool emit_plot_script) {
  cfg.validate();
  ensure_dir(out_dir);
  DriftModel model(cfg.drift_expr, cfg.param_names);
  SimulateOutput out;

  std::ofstream echo(join(out_dir, "effective_config.ini"));
  echo << cfg.to_string();
  echo.close();

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    NoiseConfig nc = cfg.noise;
    nc.horizon = cfg.total_time();
    std::uint64_t seed = derive_seed(
        cfg.master_seed, {stream_tag("sim-path"), static_cast<std::uint64_t>(rep)});
    NoisePath noise = sample_path(nc, seed);
    std::span<const double> theta(cfg.theta_true.data(), cfg.theta_true.size());
    Trajectory traj = euler_simulate(model, theta, noise, cfg.sim);

    std::string tag = "rep" + std::to_string(rep);
    std::string traj_file = join(out_dir, tag + "_trajectory.csv");
    traj.to_csv(traj_file, cfg.drift_expr);
    out.trajectory_files.push_back(traj_file);

    std::string inc_file = join(out_dir, tag + "_increments.csv");
    {
      CsvWriter w(inc_file, "increments");
      w.header({"k", "t", "dX"});
      for (std::size_t k = 1; k < traj.states.size(); ++k)
        w.row({CsvWriter::num(k), CsvWriter::num(traj.time(static_cast<int>(k))),
               CsvWriter::num(traj.states[k] - traj.states[k - 1])});
    }
    out.increment_files.push_back(inc_file);

    std::string noise_file = join(out_dir, tag + "_noise.csv");
    noise.to_csv(noise_file);
    out.noise_files.push_back(noise_file);
  }

  if (emit_plot_script) {
    std::string script = join(out_dir, "plot.gp");
    std::ofstream gp(script);
    gp << "# gnuplot script: increments above, trajectory below\n"
       << "set terminal pngcairo size 1200,800\n"
       << "set output 'trajectory.png'\n"
       << "set multiplot layout 2,1\n"
       << "set datafile separator ','\n"
       << "set datafile commentschars '#'\n"
       << "set title 'increments'\n"
       << "plot 'rep0_increments.csv' skip 2 using 2:3 with impulses notitle\n"
       << "set title 'trajectory'\n"
       << "plot 'rep0_trajectory.csv' skip 5 using 2:3 with lines notitle\n"
       << "unset multiplot\n";
    out.plot_script = script;
  }
  return out;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

EstimateOutput cmd_estimate(const ExperimentConfig& cfg, const std::string& out_dir,
                            bool write_timings) {
  cfg.validate();
  if (cfg.estimators.empty())
    throw validation_error("no estimators listed in [estimate]");
  ensure_dir(out_dir);
  DriftModel model(cfg.drift_expr, cfg.param_names);
  const int d = model.dim();
  const int reps = cfg.repetitions;
  const std::size_t n_est = cfg.estimators.size();

  {
    std::ofstream echo(join(out_dir, "effective_config.ini"));
    echo << cfg.to_string();
  }

  std::vector<EstimateRun> runs(static_cast<std::size_t>(reps) * n_est);
  parallel_for(reps, cfg.workers, [&](int rep) {
    Trajectory traj = simulate_repetition(cfg, model, rep);
    std::uint64_t rep_seed = derive_seed(
        cfg.master_seed, {stream_tag("estimate-rep"), static_cast<std::uint64_t>(rep)});
    RepetitionRunner runner(cfg, model, traj, rep_seed);
    for (std::size_t e = 0; e < n_est; ++e) {
      EstimateRun& row = runs[static_cast<std::size_t>(rep) * n_est + e];
      row.repetition = rep;
      row.estimator = cfg.estimators[e].name();
      auto t0 = std::chrono::steady_clock::now();
      try {
        EstimationResult res = runner.run(cfg.estimators[e]);
        row.theta_hat = res.theta_hat;
        row.loss = res.loss;
        row.iterations = res.report.iterations;
        row.evaluations = res.report.evaluations;
      } catch (const error& err) {
        row.error = err.what();
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
  });

  // aggregates over successes; deviation is |.| for d = 1 and the max-abs
  // component deviation for vector parameters
  EstimateOutput out;
  out.runs = std::move(runs);
  for (std::size_t e = 0; e < n_est; ++e) {
    EstimateAggregate agg;
    agg.estimator = cfg.estimators[e].name();
    agg.mean = Eigen::VectorXd::Zero(d);
    double mad = 0.0, mse = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const EstimateRun& row = out.runs[static_cast<std::size_t>(rep) * n_est + e];
      if (!row.error.empty()) {
        ++agg.failures;
        continue;
      }
      ++agg.successes;
      agg.mean += row.theta_hat;
      double dev = 0.0;
      for (int j = 0; j < d; ++j)
        dev = std::max(dev, std::abs(row.theta_hat[j] - cfg.theta_true[static_cast<std::size_t>(j)]));
      mad += dev;
      mse += dev * dev;
    }
    if (agg.successes > 0) {
      agg.mean /= static_cast<double>(agg.successes);
      agg.mad = mad / static_cast<double>(agg.successes);
      agg.rmse = std::sqrt(mse / static_cast<double>(agg.successes));
    }
    out.aggregates.push_back(std::move(agg));
  }

  // per-run rows
  {
    CsvWriter w(join(out_dir, "estimates.csv"), "estimates");
    std::vector<std::string> head{"rep", "estimator"};
    for (const auto& p : cfg.param_names) head.push_back("theta_" + p);
    head.insert(head.end(), {"loss", "iterations", "evaluations", "error"});
    w.header(head);
    for (const auto& row : out.runs) {
      std::vector<std::string> cells{CsvWriter::num(std::size_t(row.repetition)),
                                     row.estimator};
      for (int j = 0; j < d; ++j)
        cells.push_back(row.error.empty() ? CsvWriter::num(row.theta_hat[j]) : "");
      cells.push_back(row.error.empty() ? CsvWriter::num(row.loss) : "");
      cells.push_back(CsvWriter::num(static_cast<long long>(row.iterations)));
      cells.push_back(CsvWriter::num(static_cast<long long>(row.evaluations)));
      cells.push_back(row.error);
      w.row(cells);
    }
  }
  // aggregate rows
  {
    CsvWriter w(join(out_dir, "aggregates.csv"), "estimate-aggregates");
    std::vector<std::string> head{"estimator"};
    for (const auto& p : cfg.param_names) head.push_back("mean_" + p);
    head.insert(head.end(), {"mad", "rmse", "successes", "failures"});
    w.header(head);
    for (const auto& agg : out.aggregates) {
      std::vector<std::string> cells{agg.estimator};
      for (int j = 0; j < d; ++j) cells.push_back(CsvWriter::num(agg.mean[j]));
      cells.push_back(CsvWriter::num(agg.mad));
      cells.push_back(CsvWriter::num(agg.rmse));
      cells.push_back(CsvWriter::num(std::size_t(agg.successes)));
      cells.push_back(CsvWriter::num(std::size_t(agg.failures)));
      w.row(cells);
    }
  }
  if (write_timings) {
    CsvWriter w(join(out_dir, "timings.csv"), "timings");
    w.header({"rep", "estimator", "wall_ms"});
    for (const auto& row : out.runs)
      w.row({CsvWriter::num(std::size_t(row.repetition)), row.estimator,
             CsvWriter::num(row.wall_ms)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// efficiency
// ---------------------------------------------------------------------------

std::vector<EfficiencyRow> cmd_efficiency(const ExperimentConfig& cfg,
                                          const std::string& out_dir) {
  cfg.validate();
  if (cfg.eff_estimators.empty())
    throw validation_error("no estimators listed in [efficiency]");
  ensure_dir(out_dir);
  DriftModel model(cfg.drift_expr, cfg.param_names);
  const int d = model.dim();

  std::vector<EfficiencyRow> rows;
  for (const EstimatorSpec& spec : cfg.eff_estimators) {
    EstimatorFn fn = [&cfg, &model, spec](const Trajectory& traj,
                                          std::uint64_t inner_seed) {
      EstimateOptions opts = cfg.estimate_options();
      EstimationResult pilotres = estimate_lp(traj, model, spec.base, opts);
      if (spec.kind == EstimatorSpec::Kind::Raw) return pilotres.theta_hat;
      OneStepOptions oo = cfg.onestep;
      oo.seed = inner_seed;
      OneStepOutput pair =
          one_step_both(pilotres.theta_hat, traj, model, spec.base, oo);
      return spec.kind == EstimatorSpec::Kind::OneStep ? pair.newton.theta_hat
                                                       : pair.rao.theta_hat;
    };

    EfficiencyConfig ec;
    ec.trajectories = cfg.eff_trajectories;
    ec.n0 = cfg.eff_n0;
    ec.bridge_radius_factor = cfg.eff_bridge_radius_factor;
    ec.dx_floor_factor = cfg.onestep.dx_floor_factor;
    ec.seed = derive_seed(cfg.master_seed,
                          {stream_tag("efficiency"), estimator_tag(spec)});
    ec.workers = cfg.workers;
    ec.sim = cfg.sim;
    ec.noise = cfg.noise;
    ec.noise.horizon = cfg.total_time();
    ec.theta_true = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) ec.theta_true[j] = cfg.theta_true[static_cast<std::size_t>(j)];

    EfficiencyRow row;
    row.estimator = spec.name();
    row.report = run_efficiency(ec, model, fn);
    row.diagnostics = effective_sample_diagnostics(row.report);
    rows.push_back(std::move(row));

    if (cfg.eff_dump_paths) {
      CsvWriter w(join(out_dir, "efficiency_" + spec.name() + "_paths.csv"),
                  "efficiency-paths");
      std::vector<std::string> head{"kind", "index"};
      for (const auto& p : cfg.param_names) head.push_back(p);
      w.header(head);
      const EfficiencyReport& r = rows.back().report;
      for (std::size_t i = 0; i < r.theta_k.size(); ++i) {
        std::vector<std::string> cells{"theta", CsvWriter::num(i)};
        for (int j = 0; j < d; ++j) cells.push_back(CsvWriter::num(r.theta_k[i][j]));
        w.row(cells);
      }
      for (std::size_t i = 0; i < r.xi_k.size(); ++i) {
        std::vector<std::string> cells{"xi", CsvWriter::num(i)};
        for (int j = 0; j < d; ++j) cells.push_back(CsvWriter::num(r.xi_k[i][j]));
        w.row(cells);
      }
    }
  }

  {
    CsvWriter w(join(out_dir, "efficiency.csv"), "efficiency");
    std::vector<std::string> head{"estimator"};
    for (const auto& p : cfg.param_names) head.push_back("theta_hat_" + p);
    head.insert(head.end(),
                {"s2_norm", "j_norm", "raw_value", "reciprocal", "acceptance_rate",
                 "accepted", "estimator_failures", "degenerate_paths", "s2_rel_se",
                 "j_rel_se", "se_flag"});
    w.header(head);
    for (const auto& row : rows) {
      std::vector<std::string> cells{row.estimator};
      for (int j = 0; j < d; ++j)
        cells.push_back(CsvWriter::num(row.report.theta_hat[j]));
      cells.push_back(CsvWriter::num(row.report.s2.norm()));
      cells.push_back(CsvWriter::num(row.report.j_info.norm()));
      cells.push_back(CsvWriter::num(row.report.raw_value));
      cells.push_back(CsvWriter::num(row.report.reciprocal));
      cells.push_back(CsvWriter::num(row.report.acceptance_rate));
      cells.push_back(CsvWriter::num(std::size_t(row.report.accepted)));
      cells.push_back(CsvWriter::num(std::size_t(row.report.estimator_failures)));
      cells.push_back(CsvWriter::num(std::size_t(row.report.degenerate_paths)));
      cells.push_back(CsvWriter::num(row.diagnostics.s2_rel_se));
      cells.push_back(CsvWriter::num(row.diagnostics.j_rel_se));
      cells.push_back(row.diagnostics.flagged ? "1" : "0");
    }
  }
  {
    std::ofstream txt(join(out_dir, "efficiency_summary.txt"));
    for (const auto& row : rows) {
      txt << row.estimator << ": raw sqrt(J s2) = " << row.report.raw_value
          << ", reciprocal 1/raw^2 = " << row.report.reciprocal
          << ", acceptance = " << row.report.acceptance_rate
          << ", accepted = " << row.report.accepted
          << ", failures = " << row.report.estimator_failures
          << (row.diagnostics.flagged ? "  [high Monte Carlo error]" : "") << "\n";
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// bench-solvers
// ---------------------------------------------------------------------------

BenchOutput cmd_bench_solvers(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  DriftModel model(cfg.drift_expr, cfg.param_names);
  const int d = model.dim();
  BenchOutput out;

  Eigen::VectorXd start = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < cfg.start.size(); ++i)
    start[static_cast<Eigen::Index>(i)] = cfg.start[i];

  const std::vector<double> omegas{1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8};

  for (int s = 0; s < cfg.bench_seeds; ++s) {
    NoiseConfig nc = cfg.noise;
    nc.horizon = cfg.total_time();
    NoisePath noise = sample_path(
        nc, derive_seed(cfg.master_seed,
                        {stream_tag("bench-path"), static_cast<std::uint64_t>(s)}));
    std::span<const double> theta(cfg.theta_true.data(), cfg.theta_true.size());
    Trajectory traj;
    try {
      traj = euler_simulate(model, theta, noise, cfg.sim);
    } catch (const error&) {
      continue;  // exploded seed: skipped row
    }

    // relaxation comparison on the polynomial normal system
    if (model.monomial_powers()) {
      LinearSystem sys =
          build_polynomial_normal_system(traj, *model.monomial_powers(), cfg.sim.h);
      Eigen::VectorXd direct = sys.R.ldlt().solve(sys.f);

      auto best_of = [&](const char* method) {
        BenchLinearRow row;
        row.seed_index = s;
        row.method = method;
        bool have = false;
        for (double omega : omegas) {
          SolveReport rep;
          try {
            if (std::string(method) == "sor")
              rep = sor_solve(sys, omega, cfg.linear_tol, cfg.linear_max_iter, start);
            else if (std::string(method) == "ssor")
              rep = ssor_solve(sys, omega, cfg.linear_tol, cfg.linear_max_iter, start);
            else
              rep = chebyshev_ssor(sys, omega, cfg.linear_tol, cfg.linear_max_iter,
                                   start);
          } catch (const error&) {
            continue;
          }
          if (!rep.converged) continue;
          if (!have || rep.iterations < row.iterations) {
            row.omega = omega;
            row.iterations = rep.iterations;
            row.residual = rep.residual;
            row.solution = rep.solution;
            row.error_vs_direct = (rep.solution - direct).cwiseAbs().maxCoeff();
            row.converged = true;
            have = true;
          }
        }
        return row;
      };
      out.linear.push_back(best_of("sor"));
      out.linear.push_back(best_of("ssor"));
      out.linear.push_back(best_of("chebyshev-ssor"));
    }

    // derivative-free comparison on the L2 loss
    ObjectiveFn loss = [&](const Eigen::VectorXd& th) {
      return lp_loss(as_span(th), traj, model, LossP::L2);
    };
    auto add_search = [&](const char* method, const Eigen::VectorXd& point,
                          const SolveReport& rep) {
      BenchSearchRow row;
      row.seed_index = s;
      row.method = method;
      row.solution = point;
      row.rounds = rep.iterations;
      row.evaluations = rep.evaluations;
      row.line_steps = rep.line_steps;
      row.loss = rep.value;
      out.search.push_back(std::move(row));
    };
    {
      auto [p1, r1] = box_wilson(loss, start, cfg.hybrid.bw_delta, cfg.hybrid.bw_q,
                                 cfg.hybrid.hj_eps, 400);
      add_search("box-wilson", p1, r1);
      HybridOptions alone = cfg.hybrid;
      auto [p2, r2] = hooke_jeeves(loss, start, 0.5, alone.hj_shrink, alone.hj_eps,
                                   alone.hj_max_rounds);
      add_search("hooke-jeeves", p2, r2);
      auto [p3, r3] = hybrid_minimize(loss, start, cfg.hybrid);
      add_search("hybrid", p3, r3);
    }
  }

  {
    CsvWriter w(join(out_dir, "bench_linear.csv"), "bench-linear");
    std::vector<std::string> head{"seed", "method", "omega", "iterations",
                                  "residual", "err_vs_direct", "converged"};
    for (const auto& p : cfg.param_names) head.push_back(p);
    w.header(head);
    for (const auto& row : out.linear) {
      std::vector<std::string> cells{
          CsvWriter::num(std::size_t(row.seed_index)), row.method,
          CsvWriter::num(row.omega), CsvWriter::num(std::size_t(row.iterations)),
          CsvWriter::num(row.residual), CsvWriter::num(row.error_vs_direct),
          row.converged ? "1" : "0"};
      for (int j = 0; j < d; ++j)
        cells.push_back(row.solution.size() == d ? CsvWriter::num(row.solution[j])
                                                 : "");
      w.row(cells);
    }
  }
  {
    CsvWriter w(join(out_dir, "bench_search.csv"), "bench-search");
    std::vector<std::string> head{"seed", "method", "rounds", "evaluations",
                                  "line_steps", "loss"};
    for (const auto& p : cfg.param_names) head.push_back(p);
    w.header(head);
    for (const auto& row : out.search) {
      std::vector<std::string> cells{
          CsvWriter::num(std::size_t(row.seed_index)), row.method,
          CsvWriter::num(std::size_t(row.rounds)),
          CsvWriter::num(static_cast<long long>(row.evaluations)),
          CsvWriter::num(static_cast<long long>(row.line_steps)),
          CsvWriter::num(row.loss)};
      for (int j = 0; j < d; ++j) cells.push_back(CsvWriter::num(row.solution[j]));
      w.row(cells);
    }
  }
  return out;
}

}  // namespace levyest
