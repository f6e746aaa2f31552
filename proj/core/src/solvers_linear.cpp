#include <cmath>

#include "levyest/rng.hpp"
#include "levyest/solvers.hpp"

namespace levyest {

void LinearSystem::validate() const {
  if (R.rows() != R.cols() || R.rows() < 1)
    throw validation_error("system matrix must be square and non-empty");
  if (f.size() != R.rows())
    throw validation_error("right-hand side length does not match the matrix");
  double scale = R.cwiseAbs().maxCoeff();
  if (!((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(scale, 1.0)))
    throw validation_error("system matrix must be symmetric");
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    if (R(i, i) == 0.0) throw solver_error("zero diagonal entry in the system matrix");
}

namespace {

double rel_residual(const LinearSystem& sys, const Eigen::VectorXd& x) {
  double fn = sys.f.cwiseAbs().maxCoeff();
  return (sys.R * x - sys.f).cwiseAbs().maxCoeff() / std::max(fn, 1e-300);
}

void forward_sweep(const LinearSystem& sys, double omega, Eigen::VectorXd& x) {
  const Eigen::Index d = sys.R.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = sys.f[i];
    for (Eigen::Index j = 0; j < d; ++j)
      if (j != i) s -= sys.R(i, j) * x[j];
    x[i] = (1.0 - omega) * x[i] + omega * s / sys.R(i, i);
  }
}

void backward_sweep(const LinearSystem& sys, double omega, Eigen::VectorXd& x) {
  const Eigen::Index d = sys.R.rows();
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    double s = sys.f[i];
    for (Eigen::Index j = 0; j < d; ++j)
      if (j != i) s -= sys.R(i, j) * x[j];
    x[i] = (1.0 - omega) * x[i] + omega * s / sys.R(i, i);
  }
}

SolveReport relaxation_solve(const LinearSystem& sys, double omega, double tol,
                             int max_iter, const Eigen::VectorXd& start,
                             bool symmetric, const char* name) {
  sys.validate();
  if (!(omega > 0.0 && omega < 2.0))
    throw validation_error("relaxation parameter must lie in (0, 2)");
  SolveReport rep;
  rep.method = name;
  Eigen::VectorXd x = start;
  double res = rel_residual(sys, x);
  std::vector<double> history{res};
  for (int it = 1; it <= max_iter; ++it) {
    forward_sweep(sys, omega, x);
    if (symmetric) backward_sweep(sys, omega, x);
    res = rel_residual(sys, x);
    rep.iterations = it;
    if (res <= tol) {
      rep.converged = true;
      break;
    }
    history.push_back(res);
    if (history.size() > 10 && res > 10.0 * history[history.size() - 11])
      throw solver_error(std::string(name) + " diverged (residual grew 10x over 10 iterations)");
  }
  rep.solution = x;
  rep.residual = res;
  return rep;
}

double power_iteration(const Eigen::MatrixXd& g, bool* converged) {
  const Eigen::Index d = g.rows();
  Rng rng(derive_seed(0x5eed, {stream_tag("power-iteration")}));
  double best = 0.0;
  for (int restart = 0; restart < 3; ++restart) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.uniform(-1.0, 1.0);
    double nv = v.norm();
    if (nv == 0.0) continue;
    v /= nv;
    double prev = 0.0;
    for (int it = 0; it < 2000; ++it) {
      Eigen::VectorXd w = g * v;
      double nw = w.norm();
      if (nw < 1e-300) {
        if (converged) *converged = true;
        return 0.0;  // nilpotent-direction collapse: spectral radius 0
      }
      double est = nw;
      v = w / nw;
      if (it > 4 && std::abs(est - prev) <= 1e-13 * std::max(est, 1.0)) {
        if (converged) *converged = true;
        return est;
      }
      prev = est;
    }
    best = std::max(best, prev);
  }
  if (converged) *converged = false;
  // conservative upper bound
  return g.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

SolveReport sor_solve(const LinearSystem& sys, double omega, double tol,
                      int max_iter, const Eigen::VectorXd& start) {
  return relaxation_solve(sys, omega, tol, max_iter, start, false, "sor");
}

SolveReport ssor_solve(const LinearSystem& sys, double omega, double tol,
                       int max_iter, const Eigen::VectorXd& start) {
  return relaxation_solve(sys, omega, tol, max_iter, start, true, "ssor");
}

SolveReport sor_solve(const LinearSystem& sys, double omega, double tol, int max_iter) {
  return sor_solve(sys, omega, tol, max_iter, Eigen::VectorXd::Zero(sys.R.rows()));
}

SolveReport ssor_solve(const LinearSystem& sys, double omega, double tol, int max_iter) {
  return ssor_solve(sys, omega, tol, max_iter, Eigen::VectorXd::Zero(sys.R.rows()));
}

double spectral_radius(const Eigen::MatrixXd& g, bool* converged) {
  if (g.rows() != g.cols()) throw validation_error("matrix must be square");
  return power_iteration(g, converged);
}

Eigen::MatrixXd ssor_iteration_matrix(const LinearSystem& sys, double omega) {
  sys.validate();
  const Eigen::Index d = sys.R.rows();
  // One double sweep is affine, x -> G x + c; probe with unit vectors.
  LinearSystem homo = sys;
  homo.f = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd x = Eigen::VectorXd::Unit(d, j);
    forward_sweep(homo, omega, x);
    backward_sweep(homo, omega, x);
    g.col(j) = x;
  }
  return g;
}

SolveReport chebyshev_ssor(const LinearSystem& sys, double omega, double tol,
                           int max_iter, const Eigen::VectorXd& start) {
  sys.validate();
  SolveReport rep;
  rep.method = "chebyshev-ssor";

  bool rho_ok = false;
  double rho = spectral_radius(ssor_iteration_matrix(sys, omega), &rho_ok);
  if (rho >= 1.0)
    throw solver_error("SSOR iteration matrix has spectral radius >= 1; "
                       "Chebyshev acceleration requires rho < 1");

  auto sweep = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y = x;
    forward_sweep(sys, omega, y);
    backward_sweep(sys, omega, y);
    return y;
  };

  Eigen::VectorXd y_prev2 = start;
  double res = rel_residual(sys, y_prev2);
  if (res <= tol) {
    rep.solution = y_prev2;
    rep.residual = res;
    rep.converged = true;
    return rep;
  }

  Eigen::VectorXd y_prev = sweep(y_prev2);
  rep.iterations = 1;
  res = rel_residual(sys, y_prev);
  if (res <= tol || rho < 1e-12) {
    // essentially a direct sweep; no acceleration layers needed
    Eigen::VectorXd y = y_prev;
    while (res > tol && rep.iterations < max_iter) {
      y = sweep(y);
      ++rep.iterations;
      res = rel_residual(sys, y);
    }
    rep.solution = y;
    rep.residual = res;
    rep.converged = res <= tol;
    return rep;
  }

  double mu_prev2 = 1.0;
  double mu_prev = rho;
  Eigen::VectorXd y;
  for (int m = 2; m <= max_iter; ++m) {
    double mu = 1.0 / (2.0 / (rho * mu_prev) - 1.0 / mu_prev2);
    y = (2.0 * mu / (rho * mu_prev)) * sweep(y_prev) - (mu / mu_prev2) * y_prev2;
    rep.iterations = m;
    res = rel_residual(sys, y);
    if (res <= tol) {
      rep.converged = true;
      break;
    }
    y_prev2 = y_prev;
    y_prev = y;
    mu_prev2 = mu_prev;
    mu_prev = mu;
  }
  rep.solution = rep.iterations >= 2 ? y : y_prev;
  rep.residual = res;
  return rep;
}

SolveReport chebyshev_ssor(const LinearSystem& sys, double omega, double tol,
                           int max_iter) {
  return chebyshev_ssor(sys, omega, tol, max_iter, Eigen::VectorXd::Zero(sys.R.rows()));
}

}  // namespace levyest
