#include <cmath>

#include "levyest/estimators.hpp"
#include "levyest/malliavin.hpp"

namespace levyest {

namespace {

struct IntervalSpec {
  double x;        // start state
  double y;        // bridge target
  double horizon;  // time span
};

Eigen::VectorXd solve_information(const Eigen::MatrixXd& h_raw,
                                  const Eigen::VectorXd& grad) {
  Eigen::MatrixXd h = 0.5 * (h_raw + h_raw.transpose());
  const int d = static_cast<int>(h.rows());
  double tr = std::abs(h.trace());
  double lambda = 1e-8 * std::max(tr, 1e-30);

  auto try_solve = [&](const Eigen::MatrixXd& m, Eigen::VectorXd& out) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    out = ldlt.solve(grad);
    return out.allFinite();
  };

  Eigen::VectorXd step(d);
  if (try_solve(h, step)) return step;
  if (try_solve(h + lambda * Eigen::MatrixXd::Identity(d, d), step)) return step;
  throw solver_error(
      "information matrix singular or not positive after regularization");
}

}  // namespace

OneStepOutput one_step_both(const Eigen::VectorXd& theta_start,
                            const Trajectory& traj, const DriftModel& model,
                            LossP base_p, const OneStepOptions& opts) {
  const int d = model.dim();
  if (theta_start.size() != d)
    throw validation_error("theta_start length does not match the model");
  if (!theta_start.allFinite())
    throw validation_error("theta_start must be finite");
  if (opts.replicas < 1) throw validation_error("replicas must be at least 1");

  std::span<const double> theta(theta_start.data(), static_cast<std::size_t>(d));
  const double radius = opts.radius_factor * traj.increment_sd();
  const double dx_floor = opts.dx_floor_factor * traj.noise_config.u_max;

  std::vector<IntervalSpec> intervals;
  if (opts.mode == ScoreMode::PerInterval) {
    intervals.reserve(traj.states.size() - 1);
    for (std::size_t k = 1; k < traj.states.size(); ++k)
      intervals.push_back({traj.states[k - 1], traj.states[k], traj.sim.h});
  } else {
    int n0 = opts.n0;
    if (n0 < 1 || n0 > traj.sim.n)
      throw validation_error("n0 outside the observation grid");
    intervals.push_back({traj.states[0], traj.states[static_cast<std::size_t>(n0)],
                         traj.sim.h * n0});
  }

  OneStepOutput out;
  out.intervals_total = static_cast<int>(intervals.size());

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd h_newton = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd h_rao = Eigen::MatrixXd::Zero(d, d);

  NoiseConfig bridge_cfg = traj.noise_config;
  NoisePath scratch_path;
  IntervalResult iv;
  Eigen::VectorXd xi1v(d), sum1(d), m1(d);
  Eigen::MatrixXd xi2m(d, d), sum2(d, d);

  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const IntervalSpec& spec = intervals[k];
    bridge_cfg.horizon = spec.horizon;
    sum1.setZero();
    sum2.setZero();
    long cnt = 0;
    for (int j = 0; j < opts.replicas; ++j) {
      ++out.bridges;
      std::uint64_t seed = derive_seed(
          opts.seed, {stream_tag("one-step-bridge"), k + 1,
                      static_cast<std::uint64_t>(j)});
      sample_path_into(bridge_cfg, seed, scratch_path);
      double x_end;
      try {
        x_end = simulate_interval_endpoint(model, theta, spec.x, scratch_path,
                                           opts.substeps);
      } catch (const error&) {
        continue;  // exploded or left the drift domain
      }
      if (std::abs(x_end - spec.y) > radius) continue;
      ++out.accepted;
      try {
        simulate_interval(model, theta, spec.x, scratch_path, opts.substeps, iv);
        if (iv.y2 == 0.0 || std::abs(iv.y2) <= dx_floor) {
          ++out.degenerate;
          continue;
        }
        xi_from_interval(iv, dx_floor, xi1v, xi2m);
      } catch (const degenerate_path_error&) {
        ++out.degenerate;
        continue;
      } catch (const error&) {
        continue;
      }
      sum1 += xi1v;
      sum2 += xi2m;
      ++cnt;
    }
    if (cnt == 0) continue;
    m1 = sum1 / static_cast<double>(cnt);
    grad += m1;
    h_rao += m1 * m1.transpose();
    h_newton += m1 * m1.transpose() - sum2 / static_cast<double>(cnt);
    ++out.intervals_used;
  }

  double min_used = std::max(1.0, opts.min_interval_fraction * out.intervals_total);
  if (out.intervals_used < min_used)
    throw solver_error("insufficient accepted bridge paths (" +
                       std::to_string(out.intervals_used) + " of " +
                       std::to_string(out.intervals_total) + " intervals)");

  auto apply = [&](const Eigen::MatrixXd& h, const char* name) {
    Eigen::VectorXd step = solve_information(h, grad);
    double mag = step.cwiseAbs().maxCoeff();
    if (mag > opts.step_cap) {
      step *= opts.step_cap / mag;
      out.capped = true;
    }
    EstimationResult res;
    res.theta_hat = theta_start + step;
    res.method = std::string(name) + "-" + loss_name(base_p);
    res.report.method = name;
    res.report.solution = res.theta_hat;
    res.report.iterations = out.intervals_used;
    res.report.evaluations = out.bridges;
    res.report.residual = grad.norm();
    res.report.converged = true;
    std::span<const double> sp(res.theta_hat.data(), static_cast<std::size_t>(d));
    res.loss = lp_loss(sp, traj, model, base_p);
    res.report.value = res.loss;
    return res;
  };

  out.newton = apply(h_newton, "OS");
  out.rao = apply(h_rao, "Rao");
  return out;
}

EstimationResult one_step(const Eigen::VectorXd& theta_start, const Trajectory& traj,
                          const DriftModel& model, LossP base_p,
                          const OneStepOptions& opts) {
  return one_step_both(theta_start, traj, model, base_p, opts).newton;
}

EstimationResult rao_one_step(const Eigen::VectorXd& theta_start,
                              const Trajectory& traj, const DriftModel& model,
                              LossP base_p, const OneStepOptions& opts) {
  return one_step_both(theta_start, traj, model, base_p, opts).rao;
}

}  // namespace levyest
