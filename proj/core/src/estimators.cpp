#include "levyest/estimators.hpp"

#include <cmath>
#include <limits>

namespace levyest {

std::string loss_name(LossP p) {
  switch (p) {
    case LossP::L1:
      return "L1";
    case LossP::L2:
      return "L2";
    case LossP::Linf:
      return "Linf";
  }
  return "?";
}

double lp_loss(std::span<const double> theta, const Trajectory& traj,
               const DriftModel& model, LossP p) {
  if (traj.states.size() < 2) throw validation_error("trajectory has fewer than 2 points");
  const double h = traj.sim.h;
  double acc = 0.0;
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    double xk = traj.states[k - 1];
    double r = traj.states[k] - xk - model.compiled(0).eval(xk, theta) * h;
    switch (p) {
      case LossP::L1:
        acc += std::abs(r);
        break;
      case LossP::L2:
        acc += r * r;
        break;
      case LossP::Linf:
        acc = std::max(acc, std::abs(r));
        break;
    }
  }
  return acc;
}

LinearSystem build_polynomial_normal_system(const Trajectory& traj,
                                            std::span<const int> powers, double h) {
  const int d = static_cast<int>(powers.size());
  if (d < 1) throw validation_error("no powers supplied");
  for (int p : powers)
    if (p < 1 || p > 31) throw validation_error("powers must lie in [1, 31]");
  if (traj.states.size() < static_cast<std::size_t>(d) + 1)
    throw validation_error("trajectory too short for the requested degree");

  // S_ij = sum_k X_k^i X_{k+1}^j over transition pairs
  int max_pow = 0;
  for (int p : powers) max_pow = std::max(max_pow, p);
  std::vector<double> s0(static_cast<std::size_t>(2 * max_pow) + 2, 0.0);  // S_{i,0}
  std::vector<double> s1(static_cast<std::size_t>(max_pow) + 1, 0.0);      // S_{i,1}
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    double x = traj.states[k];
    double xn = traj.states[k + 1];
    double xi = 1.0;
    for (int i = 0; i <= 2 * max_pow; ++i) {
      s0[static_cast<std::size_t>(i)] += xi;
      if (i <= max_pow) s1[static_cast<std::size_t>(i)] += xi * xn;
      xi *= x;
    }
  }

  LinearSystem sys;
  sys.R.resize(d, d);
  sys.f.resize(d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b)
      sys.R(a, b) = h * s0[static_cast<std::size_t>(powers[a] + powers[b])];
    sys.f[a] = s1[static_cast<std::size_t>(powers[a])] -
               s0[static_cast<std::size_t>(powers[a] + 1)];
  }
  sys.provenance = "polynomial normal system, powers";
  for (int p : powers) sys.provenance += " " + std::to_string(p);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.R);
  lu.setThreshold(1e-12);
  if (lu.rank() < d)
    throw solver_error("degenerate normal system: trajectory lacks variation");
  return sys;
}

LinearSystem build_polynomial_normal_system(const Trajectory& traj, int degree,
                                            double h) {
  if (degree < 1) throw validation_error("degree must be at least 1");
  std::vector<int> powers;
  for (int p = degree; p >= 1; --p) powers.push_back(p);
  return build_polynomial_normal_system(traj, powers, h);
}

namespace {

EstimationResult finish(Eigen::VectorXd theta, SolveReport rep, LossP p,
                        const Trajectory& traj, const DriftModel& model) {
  EstimationResult res;
  res.loss = lp_loss(std::span<const double>(theta.data(),
                                             static_cast<std::size_t>(theta.size())),
                     traj, model, p);
  res.theta_hat = std::move(theta);
  res.method = loss_name(p);
  res.report = std::move(rep);
  return res;
}

std::vector<Residual> minimax_residuals(const Trajectory& traj,
                                        const DriftModel& model) {
  std::vector<Residual> rs;
  const double h = traj.sim.h;
  rs.reserve(traj.states.size() - 1);
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    double x = traj.states[k - 1];
    double dx = traj.states[k] - x;
    rs.push_back(Residual{
        [x, dx, h, &model](const Eigen::VectorXd& th) {
          std::span<const double> sp(th.data(), static_cast<std::size_t>(th.size()));
          return dx - model.compiled(0).eval(x, sp) * h;
        },
        [x, h, &model](const Eigen::VectorXd& th) {
          std::span<const double> sp(th.data(), static_cast<std::size_t>(th.size()));
          Eigen::VectorXd g(th.size());
          for (int a = 0; a < th.size(); ++a)
            g[a] = -h * model.compiled(0, a).eval(x, sp);
          return g;
        }});
  }
  return rs;
}

}  // namespace

EstimationResult estimate_lp(const Trajectory& traj, const DriftModel& model,
                             LossP p, const EstimateOptions& opts) {
  const int d = model.dim();
  if (d < 1) throw validation_error("model has no parameters to estimate");
  Eigen::VectorXd start = opts.start.size() == d
                              ? opts.start
                              : Eigen::VectorXd::Zero(d);

  SolverChoice choice = opts.solver;
  if (choice == SolverChoice::Auto) {
    if (p == LossP::Linf)
      choice = SolverChoice::ArmijoMinimax;
    else if (p == LossP::L2 && model.monomial_powers())
      choice = SolverChoice::NormalSystemChebyshev;
    else if (d == 1)
      choice = SolverChoice::Powell;
    else
      choice = SolverChoice::Hybrid;
  }

  ObjectiveFn loss = [&](const Eigen::VectorXd& th) {
    std::span<const double> sp(th.data(), static_cast<std::size_t>(th.size()));
    return lp_loss(sp, traj, model, p);
  };

  switch (choice) {
    case SolverChoice::Powell: {
      if (d != 1) throw validation_error("Powell route requires a scalar parameter");
      auto f = [&](double t) {
        return lp_loss(std::span<const double>(&t, 1), traj, model, p);
      };
      auto [xmin, fmin] = powell_min_1d(f, start[0] - opts.bracket_radius,
                                        start[0] + opts.bracket_radius, opts.tol);
      SolveReport rep;
      rep.method = "powell";
      rep.converged = true;
      rep.value = fmin;
      rep.solution = Eigen::VectorXd::Constant(1, xmin);
      return finish(rep.solution, rep, p, traj, model);
    }
    case SolverChoice::NormalSystemSOR:
    case SolverChoice::NormalSystemSSOR:
    case SolverChoice::NormalSystemChebyshev: {
      auto powers = model.monomial_powers();
      if (p != LossP::L2 || !powers)
        throw validation_error(
            "the normal-system route requires the L2 loss and a drift of the "
            "form sum_i theta_i x^p_i");
      LinearSystem sys = build_polynomial_normal_system(traj, *powers, traj.sim.h);
      SolveReport rep;
      if (choice == SolverChoice::NormalSystemSOR)
        rep = sor_solve(sys, opts.ssor_omega, opts.linear_tol, opts.linear_max_iter, start);
      else if (choice == SolverChoice::NormalSystemSSOR)
        rep = ssor_solve(sys, opts.ssor_omega, opts.linear_tol, opts.linear_max_iter, start);
      else
        rep = chebyshev_ssor(sys, opts.ssor_omega, opts.linear_tol,
                             opts.linear_max_iter, start);
      if (!rep.converged)
        throw solver_error("normal-system iteration did not converge");
      return finish(rep.solution, rep, p, traj, model);
    }
    case SolverChoice::Hybrid: {
      auto [point, rep] = hybrid_minimize(loss, start, opts.hybrid);
      return finish(point, rep, p, traj, model);
    }
    case SolverChoice::ArmijoMinimax: {
      if (p != LossP::Linf)
        throw validation_error("the minimax route is for the Linf loss");
      Eigen::VectorXd x0 = start;
      if (d == 1) {
        // coarse scan gives the descent a basin; the smoothed max can be
        // multimodal in the drift parameter
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 100; ++i) {
          double t = start[0] - opts.bracket_radius +
                     2.0 * opts.bracket_radius * i / 100.0;
          double v = lp_loss(std::span<const double>(&t, 1), traj, model, LossP::Linf);
          if (v < best) {
            best = v;
            x0[0] = t;
          }
        }
      }
      auto residuals = minimax_residuals(traj, model);
      ArmijoOptions ao = opts.armijo;
      auto [point, rep] = armijo_minimax(residuals, x0, opts.minimax_beta, ao);
      return finish(point, rep, p, traj, model);
    }
    default:
      throw validation_error("unsupported solver choice");
  }
}

}  // namespace levyest
