#include <cmath>
#include <limits>

#include "levyest/solvers.hpp"

namespace levyest {

namespace {

double checked(const std::function<double(double)>& f, double x) {
  double v = f(x);
  if (!std::isfinite(v)) throw solver_error("objective returned a non-finite value");
  return v;
}

}  // namespace

std::pair<double, double> powell_min_1d(const std::function<double(double)>& f,
                                        double lo, double hi, double tol,
                                        int max_iter) {
  if (!(lo < hi)) throw validation_error("empty bracket");
  if (!(tol > 0.0)) throw validation_error("tol must be positive");
  constexpr double golden = 0.3819660112501051;
  const double tiny = 1e-11;

  double a = lo, b = hi;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = checked(f, x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  for (int it = 0; it < max_iter; ++it) {
    double m = 0.5 * (a + b);
    double tol1 = tol * std::abs(x) + tiny;
    double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) return {x, fx};

    bool use_golden = true;
    if (std::abs(e) > tol1) {
      // parabolic trial through (x, w, v)
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) &&
          p < q * (b - x)) {
        d = p / q;
        double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
        use_golden = false;
      }
    }
    if (use_golden) {
      e = (x < m) ? b - x : a - x;
      d = golden * e;
    }
    double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    double fu = checked(f, u);
    if (fu <= fx) {
      if (u < x)
        b = x;
      else
        a = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx};
}

double steffensen_root(const std::function<double(double)>& q, double x0,
                       double tol, int max_iter) {
  double x = x0;
  for (int it = 0; it < max_iter; ++it) {
    double qx = q(x);
    if (!std::isfinite(qx)) throw solver_error("Q returned a non-finite value");
    if (std::abs(qx) <= tol) return x;
    double den = q(x + qx) - qx;
    if (!std::isfinite(den)) throw solver_error("Q returned a non-finite value");
    if (std::abs(den) < 1e-300 * std::abs(qx))
      throw solver_error("Steffensen iteration stalled (denominator underflow)");
    x -= qx * qx / den;
    if (!std::isfinite(x)) throw solver_error("Steffensen iterate diverged");
  }
  throw solver_error("Steffensen iteration exceeded max_iter");
}

}  // namespace levyest
