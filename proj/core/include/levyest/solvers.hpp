#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "levyest/errors.hpp"

namespace levyest {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

/// Symmetric linear system R x = f with a provenance note for reports.
struct LinearSystem {
  Eigen::MatrixXd R;
  Eigen::VectorXd f;
  std::string provenance;

  void validate() const;
};

struct SolveReport {
  Eigen::VectorXd solution;
  int iterations = 0;
  double residual = 0.0;  // stopping metric actually achieved
  bool converged = false;
  std::string method;
  long evaluations = 0;  // objective evaluations (search methods)
  long line_steps = 0;   // accepted descent-line steps
  double value = 0.0;    // objective at the solution (search methods)
};

// -- scalar methods ---------------------------------------------------------

/// Parabolic-interpolation minimizer with golden-section fallback.
/// Requires f finite on [lo, hi]; returns (argmin, f(argmin)).
std::pair<double, double> powell_min_1d(const std::function<double(double)>& f,
                                        double lo, double hi, double tol,
                                        int max_iter = 200);

/// x_{k+1} = x_k - Q(x_k)^2 / (Q(x_k + Q(x_k)) - Q(x_k)).
double steffensen_root(const std::function<double(double)>& q, double x0,
                       double tol, int max_iter);

// -- stationary and accelerated linear iterations ---------------------------

/// Plain successive over-relaxation: forward sweeps only.
SolveReport sor_solve(const LinearSystem& sys, double omega, double tol,
                      int max_iter, const Eigen::VectorXd& start);

/// Symmetric SOR: one iteration is a forward sweep then a backward sweep.
SolveReport ssor_solve(const LinearSystem& sys, double omega, double tol,
                       int max_iter, const Eigen::VectorXd& start);

SolveReport sor_solve(const LinearSystem& sys, double omega, double tol, int max_iter);
SolveReport ssor_solve(const LinearSystem& sys, double omega, double tol, int max_iter);

/// Largest |eigenvalue| by power iteration with restarts.  When the iteration
/// fails to settle within the cap, returns the conservative upper bound
/// ||G||_inf and clears *converged.
double spectral_radius(const Eigen::MatrixXd& g, bool* converged = nullptr);

/// Iteration matrix G of one SSOR double sweep, x -> G x + c.
Eigen::MatrixXd ssor_iteration_matrix(const LinearSystem& sys, double omega);

/// Three-layer Chebyshev acceleration over the SSOR iteration:
///   mu_0 = 1, mu_1 = rho, mu_m = (2/(rho mu_{m-1}) - 1/mu_{m-2})^-1,
///   y^m = (2 mu_m / (rho mu_{m-1})) (G y^{m-1} + c) - (mu_m/mu_{m-2}) y^{m-2}.
SolveReport chebyshev_ssor(const LinearSystem& sys, double omega, double tol,
                           int max_iter, const Eigen::VectorXd& start);
SolveReport chebyshev_ssor(const LinearSystem& sys, double omega, double tol,
                           int max_iter);

// -- derivative-free multivariate search -------------------------------------

/// Response-surface descent: 2^d factorial design around the current point
/// (fractional above d = 4), regression coefficients as the gradient
/// estimate, then a line march theta -= k q (b o delta) while f decreases.
/// Stops when ||b|| <= eps.  delta shrinks only on fully stalled rounds.
std::pair<Eigen::VectorXd, SolveReport> box_wilson(const ObjectiveFn& f,
                                                   const Eigen::VectorXd& theta0,
                                                   double delta, double q,
                                                   double eps, int max_rounds);

/// Pattern search: per-coordinate exploratory moves, pattern move doubling
/// successful directions, step shrink on failure, stop when step < eps.
std::pair<Eigen::VectorXd, SolveReport> hooke_jeeves(const ObjectiveFn& f,
                                                     const Eigen::VectorXd& theta0,
                                                     double step0, double shrink,
                                                     double eps, int max_rounds);

struct HybridOptions {
  double bw_delta = 0.25;
  double bw_q = 1.0;
  double bw_eps = 0.02;
  int bw_max_rounds = 60;
  double hj_step0 = 0.1;
  double hj_shrink = 0.5;
  double hj_eps = 1e-5;
  int hj_max_rounds = 400;
};

/// box_wilson to coarse tolerance, then hooke_jeeves from its output.
std::pair<Eigen::VectorXd, SolveReport> hybrid_minimize(const ObjectiveFn& f,
                                                        const Eigen::VectorXd& theta0,
                                                        const HybridOptions& opts);

// -- smoothed discrete minimax ------------------------------------------------

/// One residual of the minimax problem, with its gradient.
struct Residual {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
};

struct ArmijoOptions {
  double grad_tol = 1e-6;
  int max_iters = 500;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
  int anneal_stages = 3;  // beta, beta/10, beta/100
};

/// Minimizes F_beta(theta) = max_i sqrt(Q_i(theta)^2 + beta^2) by steepest
/// descent on the smoothed max (gradient from the attaining residual, ties
/// averaged) with Armijo backtracking.
std::pair<Eigen::VectorXd, SolveReport> armijo_minimax(
    const std::vector<Residual>& residuals, const Eigen::VectorXd& theta0,
    double beta, const ArmijoOptions& opts);

}  // namespace levyest
