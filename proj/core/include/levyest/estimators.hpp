#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "levyest/sde.hpp"
#include "levyest/solvers.hpp"

namespace levyest {

enum class LossP { L1, L2, Linf };

std::string loss_name(LossP p);

struct EstimationResult {
  Eigen::VectorXd theta_hat;
  std::string method;  // "L1", "L2", "Linf", "OS-L1", ..., "Rao-Linf"
  SolveReport report;
  double loss = 0.0;  // Lp loss at theta_hat (base p for one-step variants)
};

/// Sum/max of Euler residuals r_k = X_k - X_{k-1} - A_theta(X_{k-1}) h.
double lp_loss(std::span<const double> theta, const Trajectory& traj,
               const DriftModel& model, LossP p);

enum class SolverChoice {
  Auto,
  Powell,
  Hybrid,
  ArmijoMinimax,
  NormalSystemSOR,
  NormalSystemSSOR,
  NormalSystemChebyshev,
};

struct EstimateOptions {
  SolverChoice solver = SolverChoice::Auto;
  Eigen::VectorXd start;
  double bracket_radius = 3.0;  // scalar bracket around start
  double tol = 1e-8;
  HybridOptions hybrid;
  double minimax_beta = 1e-2;
  ArmijoOptions armijo;
  double ssor_omega = 1.2;
  double linear_tol = 1e-12;
  int linear_max_iter = 500;
};

/// Routes to the solver the problem shape calls for: Powell for scalar
/// L1/L2, the normal system for polynomial-in-theta L2, the smoothed
/// minimax for Linf, and the Box-Wilson + Hooke-Jeeves hybrid otherwise.
EstimationResult estimate_lp(const Trajectory& traj, const DriftModel& model,
                             LossP p, const EstimateOptions& opts);

/// Normal equations of the L2 loss for drift sum_i theta_i x^{p_i}.
/// Entries are h * S_{p_a + p_b, 0}; right-hand side S_{p_a, 1} - S_{p_a + 1, 0},
/// with S_ij = sum_k X_k^i X_{k+1}^j.
LinearSystem build_polynomial_normal_system(const Trajectory& traj,
                                            std::span<const int> powers, double h);
/// Degree-m convenience form: powers m, m-1, ..., 1.
LinearSystem build_polynomial_normal_system(const Trajectory& traj, int degree,
                                            double h);

// ---------------------------------------------------------------------------
// One-step correction
// ---------------------------------------------------------------------------

enum class ScoreMode {
  PerInterval,  // conditional expectations per observation interval
  WholePath,    // single functional at grid horizon n0
};

struct OneStepOptions {
  int replicas = 200;             // bridge replicas per interval
  double radius_factor = 0.1;     // acceptance radius, units of increment sd
  double dx_floor_factor = 0.05;  // degeneracy floor, units of u_max
  int substeps = 1;               // bridge Euler substeps
  double step_cap = 10.0;         // cap on the correction max-norm
  ScoreMode mode = ScoreMode::PerInterval;
  int n0 = 1;                     // WholePath horizon (grid index)
  std::uint64_t seed = 0;
  double min_interval_fraction = 0.1;
};

struct OneStepOutput {
  EstimationResult newton;  // H from the information functional
  EstimationResult rao;     // H from the outer product of scores
  long bridges = 0;
  long accepted = 0;
  long degenerate = 0;
  int intervals_used = 0;
  int intervals_total = 0;
  bool capped = false;
};

/// Shared bridge pass: estimates the conditional score E[Xi1 | x, y] and
/// information per interval, sums them, and applies the Newton correction
/// theta + H^{-1} grad with H = sum_k [ m1_k m1_k^T - m2_k ] (Newton) or
/// H = sum_k m1_k m1_k^T (Rao).  `base_p` names the pilot for reporting.
OneStepOutput one_step_both(const Eigen::VectorXd& theta_start,
                            const Trajectory& traj, const DriftModel& model,
                            LossP base_p, const OneStepOptions& opts);

EstimationResult one_step(const Eigen::VectorXd& theta_start, const Trajectory& traj,
                          const DriftModel& model, LossP base_p,
                          const OneStepOptions& opts);

EstimationResult rao_one_step(const Eigen::VectorXd& theta_start,
                              const Trajectory& traj, const DriftModel& model,
                              LossP base_p, const OneStepOptions& opts);

}  // namespace levyest
