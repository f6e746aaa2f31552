#include "levyest/efficiency.hpp"

#include <cmath>

#include "levyest/malliavin.hpp"
#include "levyest/parallel.hpp"

namespace levyest {

void EfficiencyConfig::validate() const {
  if (trajectories < 2) throw validation_error("need at least 2 trajectories");
  if (n0 < 1 || n0 > sim.n) throw validation_error("n0 must lie in [1, n]");
  if (!(bridge_radius_factor > 0.0))
    throw validation_error("bridge radius factor must be positive");
  if (theta_true.size() == 0) throw validation_error("theta_true is empty");
  sim.validate();
  noise.validate();
}

std::vector<std::size_t> bridge_filter(std::span<const double> endpoints,
                                       double target, double radius,
                                       double* acceptance_rate) {
  if (!(radius > 0.0)) throw validation_error("bridge radius must be positive");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < endpoints.size(); ++i)
    if (std::abs(endpoints[i] - target) <= radius) kept.push_back(i);
  if (acceptance_rate)
    *acceptance_rate = endpoints.empty()
                           ? 0.0
                           : static_cast<double>(kept.size()) /
                                 static_cast<double>(endpoints.size());
  return kept;
}

namespace {

Eigen::MatrixXd matrix_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

EfficiencyReport run_efficiency(const EfficiencyConfig& cfg, const DriftModel& model,
                                const EstimatorFn& estimator) {
  cfg.validate();
  const int d = model.dim();
  if (cfg.theta_true.size() != d)
    throw validation_error("theta_true length does not match the model");
  const int n_paths = cfg.trajectories;
  const double n_obs = static_cast<double>(cfg.sim.n);

  EfficiencyReport rep;

  // (1) reference path at theta_true, reference estimate
  std::span<const double> theta_true(cfg.theta_true.data(),
                                     static_cast<std::size_t>(d));
  NoiseConfig nc = cfg.noise;
  nc.horizon = cfg.sim.h * cfg.sim.n;
  NoisePath ref_noise = sample_path(nc, derive_seed(cfg.seed, {stream_tag("eff-ref")}));
  Trajectory ref = euler_simulate(model, theta_true, ref_noise, cfg.sim);
  rep.theta_hat = estimator(ref, derive_seed(cfg.seed, {stream_tag("eff-ref-est")}));
  std::span<const double> theta_hat(rep.theta_hat.data(), static_cast<std::size_t>(d));

  rep.bridge_radius = cfg.bridge_radius_factor * ref.increment_sd();
  const double target = ref.states[static_cast<std::size_t>(cfg.n0)];
  const double dx_floor = cfg.dx_floor_factor * cfg.noise.u_max;

  // (2)+(3) variance paths, re-estimation; seeds disjoint from step (4)
  std::vector<Eigen::VectorXd> theta_k(static_cast<std::size_t>(n_paths));
  std::vector<char> theta_ok(static_cast<std::size_t>(n_paths), 0);
  parallel_for(n_paths, cfg.workers, [&](int k) {
    NoisePath noise = sample_path(
        nc, derive_seed(cfg.seed, {stream_tag("eff-var"), static_cast<std::uint64_t>(k)}));
    try {
      Trajectory traj = euler_simulate(model, theta_hat, noise, cfg.sim);
      theta_k[static_cast<std::size_t>(k)] = estimator(
          traj,
          derive_seed(cfg.seed, {stream_tag("eff-var-est"), static_cast<std::uint64_t>(k)}));
      theta_ok[static_cast<std::size_t>(k)] = 1;
    } catch (const error&) {
      // recorded and skipped
    }
  });

  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
  int n_ok = 0;
  for (int k = 0; k < n_paths; ++k) {
    if (!theta_ok[static_cast<std::size_t>(k)]) {
      ++rep.estimator_failures;
      continue;
    }
    Eigen::VectorXd v = theta_k[static_cast<std::size_t>(k)] - rep.theta_hat;
    s2 += n_obs * v * v.transpose();
    rep.theta_k.push_back(theta_k[static_cast<std::size_t>(k)]);
    ++n_ok;
  }
  if (n_ok < 2) throw solver_error("too few successful re-estimations");
  s2 /= static_cast<double>(n_ok);
  rep.s2 = s2;

  // (4) information paths with the bridge filter
  std::vector<double> endpoints(static_cast<std::size_t>(n_paths));
  std::vector<Eigen::VectorXd> xi(static_cast<std::size_t>(n_paths));
  std::vector<char> xi_ok(static_cast<std::size_t>(n_paths), 0);
  parallel_for(n_paths, cfg.workers, [&](int k) {
    NoisePath noise = sample_path(
        nc, derive_seed(cfg.seed, {stream_tag("eff-info"), static_cast<std::uint64_t>(k)}));
    try {
      Trajectory traj = euler_simulate(model, theta_hat, noise, cfg.sim);
      endpoints[static_cast<std::size_t>(k)] =
          traj.states[static_cast<std::size_t>(cfg.n0)];
      SensitivityPath sens = propagate_sensitivities(model, theta_hat, noise, traj);
      xi[static_cast<std::size_t>(k)] = xi1(sens, cfg.n0, dx_floor);
      xi_ok[static_cast<std::size_t>(k)] = 1;
    } catch (const degenerate_path_error&) {
      endpoints[static_cast<std::size_t>(k)] = std::numeric_limits<double>::infinity();
    } catch (const error&) {
      endpoints[static_cast<std::size_t>(k)] = std::numeric_limits<double>::infinity();
    }
  });

  auto kept = bridge_filter(endpoints, target, rep.bridge_radius, &rep.acceptance_rate);

  // (5) J as the average outer product over accepted paths
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i : kept) {
    if (!xi_ok[i]) {
      ++rep.degenerate_paths;
      continue;
    }
    j += xi[i] * xi[i].transpose();
    rep.xi_k.push_back(xi[i]);
    ++rep.accepted;
  }
  for (int k = 0; k < n_paths; ++k)
    if (!xi_ok[static_cast<std::size_t>(k)] && std::isinf(endpoints[static_cast<std::size_t>(k)]))
      ++rep.degenerate_paths;
  if (rep.accepted == 0)
    throw solver_error("no bridge-accepted paths; widen the radius or raise N");
  j /= static_cast<double>(rep.accepted);
  if (j.norm() == 0.0)
    throw solver_error("zero information: the score vanishes identically");
  rep.j_info = j;

  // (6) efficiency values
  Eigen::MatrixXd jr = matrix_sqrt(j);
  Eigen::MatrixXd core = jr * s2 * jr;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(core);
  rep.spectrum.assign(es.eigenvalues().data(),
                      es.eigenvalues().data() + es.eigenvalues().size());
  double lam_max = es.eigenvalues().cwiseMax(0.0).maxCoeff();
  rep.raw_value = std::sqrt(lam_max);
  rep.reciprocal = rep.raw_value > 0.0
                       ? 1.0 / (rep.raw_value * rep.raw_value)
                       : std::numeric_limits<double>::infinity();
  return rep;
}

namespace {

// Jackknife SE of a mean-of-outer-products statistic, relative to its size.
double jackknife_rel_se(const std::vector<Eigen::VectorXd>& contributions,
                        const Eigen::MatrixXd& full, double scale) {
  const std::size_t n = contributions.size();
  if (n < 3) return std::numeric_limits<double>::infinity();
  const int d = static_cast<int>(full.rows());
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (const auto& v : contributions) total += scale * v * v.transpose();
  Eigen::MatrixXd mean_loo = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::MatrixXd> loo;
  loo.reserve(n);
  for (const auto& v : contributions) {
    Eigen::MatrixXd t = (total - scale * v * v.transpose()) / static_cast<double>(n - 1);
    loo.push_back(t);
    mean_loo += t;
  }
  mean_loo /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& t : loo) ss += (t - mean_loo).squaredNorm();
  double se = std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
  double base = full.norm();
  return base > 0.0 ? se / base : (se > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

}  // namespace

SampleDiagnostics effective_sample_diagnostics(const EfficiencyReport& report) {
  SampleDiagnostics diag;
  const int d = static_cast<int>(report.theta_hat.size());
  std::vector<Eigen::VectorXd> devs;
  devs.reserve(report.theta_k.size());
  for (const auto& t : report.theta_k) devs.push_back(t - report.theta_hat);
  double n_obs = 0.0;
  if (!devs.empty() && report.s2.rows() == d) {
    // scale recovers the n multiplier used in s2
    double denom = 0.0;
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(d, d);
    for (const auto& v : devs) raw += v * v.transpose();
    raw /= static_cast<double>(devs.size());
    denom = raw.norm();
    n_obs = denom > 0.0 ? report.s2.norm() / denom : 1.0;
  }
  diag.s2_rel_se = jackknife_rel_se(devs, report.s2, n_obs == 0.0 ? 1.0 : n_obs);
  diag.j_rel_se = jackknife_rel_se(report.xi_k, report.j_info, 1.0);
  diag.flagged = !(diag.s2_rel_se <= 0.2) || !(diag.j_rel_se <= 0.2);
  return diag;
}

}  // namespace levyest
