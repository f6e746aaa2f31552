#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "levyest/sde.hpp"

namespace levyest {

/// Produces an estimate from a trajectory.  `inner_seed` feeds any Monte
/// Carlo the estimator itself runs (one-step bridges); plain Lp estimators
/// ignore it.
using EstimatorFn =
    std::function<Eigen::VectorXd(const Trajectory&, std::uint64_t inner_seed)>;

struct EfficiencyConfig {
  int trajectories = 100;             // N
  int n0 = 1;                         // evaluation horizon, grid index
  double bridge_radius_factor = 0.1;  // units of reference increment sd
  double dx_floor_factor = 0.05;      // units of u_max
  std::uint64_t seed = 0;
  int workers = 1;

  SimConfig sim;
  NoiseConfig noise;
  Eigen::VectorXd theta_true;

  void validate() const;
};

struct EfficiencyReport {
  Eigen::VectorXd theta_hat;  // step (1)
  Eigen::MatrixXd s2;         // step (3): (1/N) sum n (th_k - th)(th_k - th)^T
  Eigen::MatrixXd j_info;     // step (5): (1/N_acc) sum Xi_k Xi_k^T

  // step (6): raw = sqrt of the largest eigenvalue of J^(1/2) s2 J^(1/2)
  // (= sqrt(J s2) when d = 1).  The reciprocal 1/raw^2 orders estimators the
  // other way; both are reported and tests compare orderings only.
  double raw_value = 0.0;
  double reciprocal = 0.0;
  std::vector<double> spectrum;

  double acceptance_rate = 0.0;
  double bridge_radius = 0.0;
  int estimator_failures = 0;
  int degenerate_paths = 0;
  int accepted = 0;

  // per-path data retained for the jackknife diagnostics
  std::vector<Eigen::VectorXd> theta_k;
  std::vector<Eigen::VectorXd> xi_k;
};

/// The six-step check: (1) estimate on a reference path; (2) simulate N paths
/// at the estimate; (3) re-estimate on each, form the normalized sample
/// covariance; (4) simulate N fresh paths (disjoint seed space), evaluate the
/// score functional at n0 under the bridge filter; (5) average the outer
/// products; (6) combine.  Deterministic given cfg.seed.
EfficiencyReport run_efficiency(const EfficiencyConfig& cfg, const DriftModel& model,
                                const EstimatorFn& estimator);

/// Keeps indices of endpoints within `radius` of `target`; writes the
/// acceptance rate when requested.
std::vector<std::size_t> bridge_filter(std::span<const double> endpoints,
                                       double target, double radius,
                                       double* acceptance_rate = nullptr);

struct SampleDiagnostics {
  double s2_rel_se = 0.0;  // jackknife SE of s2, relative (Frobenius)
  double j_rel_se = 0.0;   // jackknife SE of J, relative
  bool flagged = false;    // any relative SE above 20% (or too few paths)
};

SampleDiagnostics effective_sample_diagnostics(const EfficiencyReport& report);

}  // namespace levyest
