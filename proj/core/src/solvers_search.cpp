#include <bit>
#include <cmath>

#include "levyest/solvers.hpp"

namespace levyest {

namespace {

double checked(const ObjectiveFn& f, const Eigen::VectorXd& x, long& evals) {
  ++evals;
  double v = f(x);
  if (!std::isfinite(v)) throw solver_error("objective returned a non-finite value");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Box-Wilson response-surface descent
// ---------------------------------------------------------------------------

std::pair<Eigen::VectorXd, SolveReport> box_wilson(const ObjectiveFn& f,
                                                   const Eigen::VectorXd& theta0,
                                                   double delta, double q,
                                                   double eps, int max_rounds) {
  const int d = static_cast<int>(theta0.size());
  if (d < 1) throw validation_error("empty parameter vector");
  if (!(delta > 0.0 && q > 0.0 && eps > 0.0))
    throw validation_error("delta, q and eps must be positive");

  // Full factorial for d <= 4; a 2^k fraction above, factor j taking the
  // product column with bit mask j+1.
  int k = 0;
  while ((1 << k) - 1 < d) ++k;
  if (d <= 4) k = d;
  const int runs = 1 << k;
  auto sign = [&](int run, int factor) {
    unsigned mask = d <= 4 ? (1u << factor) : static_cast<unsigned>(factor + 1);
    return (std::popcount(static_cast<unsigned>(run) & mask) & 1) ? 1.0 : -1.0;
  };

  SolveReport rep;
  rep.method = "box-wilson";
  Eigen::VectorXd base = theta0;
  Eigen::VectorXd dvec = Eigen::VectorXd::Constant(d, delta);
  double fbase = checked(f, base, rep.evaluations);
  Eigen::VectorXd b(d);
  double bnorm = 0.0;

  for (int round = 1; round <= max_rounds; ++round) {
    rep.iterations = round;
    // factorial corners
    std::vector<double> fc(static_cast<std::size_t>(runs));
    Eigen::VectorXd corner(d);
    for (int i = 0; i < runs; ++i) {
      for (int j = 0; j < d; ++j) corner[j] = base[j] + sign(i, j) * dvec[j];
      fc[static_cast<std::size_t>(i)] = checked(f, corner, rep.evaluations);
    }
    // regression coefficients, normalized to estimate the gradient
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < runs; ++i) s += sign(i, j) * fc[static_cast<std::size_t>(i)];
      b[j] = s / (runs * dvec[j]);
    }
    bnorm = b.norm();
    if (bnorm <= eps) {
      rep.converged = true;
      break;
    }
    // march along the regression direction while f decreases
    bool moved = false;
    for (;;) {
      Eigen::VectorXd cand = base - q * b.cwiseProduct(dvec);
      double fcand = checked(f, cand, rep.evaluations);
      if (fcand < fbase) {
        base = cand;
        fbase = fcand;
        moved = true;
        ++rep.line_steps;
      } else {
        break;
      }
    }
    if (!moved) {
      dvec *= 0.5;  // stalled round: refine the design
      if (dvec.maxCoeff() < 1e-14)
        throw solver_error("box-wilson design collapsed before reaching eps");
    }
  }
  rep.solution = base;
  rep.residual = bnorm;
  rep.value = fbase;
  return {base, rep};
}

// ---------------------------------------------------------------------------
// Hooke-Jeeves pattern search
// ---------------------------------------------------------------------------

namespace {

// Sequential per-coordinate probe; accepts strict improvements.
Eigen::VectorXd hj_explore(const ObjectiveFn& f, Eigen::VectorXd x, double& fx,
                           double step, long& evals) {
  const int d = static_cast<int>(x.size());
  for (int j = 0; j < d; ++j) {
    double orig = x[j];
    x[j] = orig + step;
    double fp = checked(f, x, evals);
    if (fp < fx) {
      fx = fp;
      continue;
    }
    x[j] = orig - step;
    double fm = checked(f, x, evals);
    if (fm < fx) {
      fx = fm;
      continue;
    }
    x[j] = orig;
  }
  return x;
}

}  // namespace

std::pair<Eigen::VectorXd, SolveReport> hooke_jeeves(const ObjectiveFn& f,
                                                     const Eigen::VectorXd& theta0,
                                                     double step0, double shrink,
                                                     double eps, int max_rounds) {
  if (!(step0 > eps && eps > 0.0))
    throw validation_error("require step0 > eps > 0");
  if (!(shrink > 0.0 && shrink < 1.0))
    throw validation_error("shrink must lie in (0, 1)");

  SolveReport rep;
  rep.method = "hooke-jeeves";
  Eigen::VectorXd base = theta0;
  double fbase = checked(f, base, rep.evaluations);
  double step = step0;

  while (rep.iterations < max_rounds) {
    ++rep.iterations;
    double fx = fbase;
    Eigen::VectorXd x = hj_explore(f, base, fx, step, rep.evaluations);
    if (fx < fbase) {
      // pattern phase: double the successful direction while it keeps paying
      Eigen::VectorXd prev = base;
      base = x;
      fbase = fx;
      while (rep.iterations < max_rounds) {
        ++rep.iterations;
        Eigen::VectorXd pattern = base + (base - prev);
        double fp = checked(f, pattern, rep.evaluations);
        Eigen::VectorXd y = hj_explore(f, pattern, fp, step, rep.evaluations);
        if (fp < fbase) {
          prev = base;
          base = y;
          fbase = fp;
        } else {
          break;
        }
      }
    } else {
      step *= shrink;
      if (step < eps) {
        rep.converged = true;
        break;
      }
    }
  }
  rep.solution = base;
  rep.residual = step;
  rep.value = fbase;
  return {base, rep};
}

std::pair<Eigen::VectorXd, SolveReport> hybrid_minimize(const ObjectiveFn& f,
                                                        const Eigen::VectorXd& theta0,
                                                        const HybridOptions& opts) {
  auto [coarse, bw] = box_wilson(f, theta0, opts.bw_delta, opts.bw_q, opts.bw_eps,
                                 opts.bw_max_rounds);
  auto [fine, hj] = hooke_jeeves(f, coarse, opts.hj_step0, opts.hj_shrink,
                                 opts.hj_eps, opts.hj_max_rounds);
  SolveReport rep;
  rep.method = "hybrid";
  rep.solution = fine;
  rep.iterations = bw.iterations + hj.iterations;
  rep.evaluations = bw.evaluations + hj.evaluations;
  rep.line_steps = bw.line_steps + hj.line_steps;
  rep.residual = hj.residual;
  rep.converged = hj.converged;
  rep.value = hj.value;
  return {fine, rep};
}

// ---------------------------------------------------------------------------
// Smoothed discrete minimax with Armijo backtracking
// ---------------------------------------------------------------------------

namespace {

double smoothed_max(const std::vector<Residual>& residuals, const Eigen::VectorXd& x,
                    double beta, Eigen::VectorXd* grad) {
  double fmax = -1.0;
  std::vector<std::pair<double, std::size_t>> vals;  // (smoothed, index)
  vals.reserve(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    double v = residuals[i].value(x);
    double s = std::sqrt(v * v + beta * beta);
    vals.emplace_back(s, i);
    fmax = std::max(fmax, s);
  }
  if (!std::isfinite(fmax))
    throw solver_error("residual returned a non-finite value");
  if (grad) {
    grad->setZero(x.size());
    int hits = 0;
    for (auto& [s, i] : vals) {
      if (s >= fmax * (1.0 - 1e-12)) {
        double v = residuals[i].value(x);
        *grad += (v / s) * residuals[i].grad(x);
        ++hits;
      }
    }
    if (hits > 1) *grad /= static_cast<double>(hits);  // ties averaged
  }
  return fmax;
}

}  // namespace

std::pair<Eigen::VectorXd, SolveReport> armijo_minimax(
    const std::vector<Residual>& residuals, const Eigen::VectorXd& theta0,
    double beta, const ArmijoOptions& opts) {
  if (residuals.empty()) throw validation_error("no residuals supplied");
  if (!(beta > 0.0)) throw validation_error("beta must be positive");

  SolveReport rep;
  rep.method = "armijo-minimax";
  Eigen::VectorXd x = theta0;
  double gnorm = 0.0;
  double fx = 0.0;

  int stages = std::max(opts.anneal_stages, 1);
  for (int stage = 0; stage < stages; ++stage) {
    double b = beta * std::pow(10.0, -stage);
    Eigen::VectorXd grad(x.size());
    for (int it = 0; it < opts.max_iters; ++it) {
      ++rep.iterations;
      fx = smoothed_max(residuals, x, b, &grad);
      ++rep.evaluations;
      gnorm = grad.norm();
      if (gnorm <= opts.grad_tol) break;
      double step = opts.initial_step;
      bool accepted = false;
      while (step > 1e-18) {
        Eigen::VectorXd cand = x - step * grad;
        double fc = smoothed_max(residuals, cand, b, nullptr);
        ++rep.evaluations;
        if (fc <= fx - opts.sufficient_decrease * step * gnorm * gnorm) {
          x = cand;
          fx = fc;
          accepted = true;
          ++rep.line_steps;
          break;
        }
        step *= opts.backtrack;
      }
      if (!accepted) break;  // line-search stall: gradient scale exhausted
    }
  }
  rep.solution = x;
  rep.residual = gnorm;
  rep.converged = gnorm <= opts.grad_tol;
  rep.value = fx;
  return {x, rep};
}

}  // namespace levyest
