#include "levyest/malliavin.hpp"

#include <cmath>

namespace levyest {

namespace {

struct Functionals {
  const double* u;   // d
  double w;
  const double* m;   // d
  double p;
  const double* v;   // tri
  const double* r;   // tri
  const double* nn;  // d
  double s;
  double del1, ddel1;
  int d;

  std::size_t t2(int a, int b) const {
    if (a > b) std::swap(a, b);
    return static_cast<std::size_t>(a) * d - static_cast<std::size_t>(a) * (a - 1) / 2 +
           static_cast<std::size_t>(b - a);
  }
};

void check_degenerate(double w, double dx_floor) {
  if (w == 0.0 || std::abs(w) <= dx_floor)
    throw degenerate_path_error(
        "DX vanished (no effective jump information on this path)");
}

Eigen::VectorXd xi1_impl(const Functionals& f, double dx_floor) {
  check_degenerate(f.w, dx_floor);
  Eigen::VectorXd out(f.d);
  const double w = f.w, w2 = w * w;
  for (int a = 0; a < f.d; ++a)
    out[a] = f.u[a] * f.del1 / w + f.u[a] * f.p / w2 - f.m[a] / w;
  if (!out.allFinite())
    throw degenerate_path_error("score functional overflowed near DX = 0");
  return out;
}

Eigen::MatrixXd xi2_impl(const Functionals& f, double dx_floor) {
  check_degenerate(f.w, dx_floor);
  const double w = f.w, w2 = w * w, w3 = w2 * w;
  Eigen::MatrixXd out(f.d, f.d);
  for (int a = 0; a < f.d; ++a)
    for (int b = a; b < f.d; ++b) {
      const double ua = f.u[a], ub = f.u[b];
      const double ma = f.m[a], mb = f.m[b];
      const double na = f.nn[a], nb = f.nn[b];
      const double vab = f.v[f.t2(a, b)];
      const double rab = f.r[f.t2(a, b)];
      const double uu = ua * ub;
      const double mu = ma * ub + ua * mb;

      // inner Skorokhod integral delta(U_a U_b / W)
      const double din = uu * f.del1 / w - mu / w + uu * f.p / w2;
      // its stochastic derivative
      const double ddin = mu * f.del1 / w + uu * f.ddel1 / w -
                          uu * f.del1 * f.p / w2 -
                          (na * ub + 2.0 * ma * mb + ua * nb) / w +
                          2.0 * mu * f.p / w2 + uu * f.s / w2 -
                          2.0 * uu * f.p * f.p / w3;
      // outer integral via delta(W) = W delta(1) - DW
      const double val =
          -(ddin + rab) / w + (f.del1 / w + f.p / w2) * (din + vab);
      out(a, b) = val;
      out(b, a) = val;
    }
  if (!out.allFinite())
    throw degenerate_path_error("information functional overflowed near DX = 0");
  return out;
}

Functionals from_path(const SensitivityPath& s, int k) {
  if (k < 0 || k > s.n_obs()) throw validation_error("grid index out of range");
  // SensitivityPath stores rows contiguously; borrow pointers via accessors.
  static thread_local std::vector<double> u, m, v, r, nn;
  int d = s.dim();
  std::size_t tri = static_cast<std::size_t>(d) * (d + 1) / 2;
  u.resize(d);
  m.resize(d);
  nn.resize(d);
  v.resize(tri);
  r.resize(tri);
  for (int a = 0; a < d; ++a) {
    u[a] = s.y1(k, a);
    m[a] = s.y3(k, a);
    nn[a] = s.d2y1(k, a);
  }
  std::size_t t = 0;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b, ++t) {
      v[t] = s.theta2(k, a, b);
      r[t] = s.dtheta2(k, a, b);
    }
  return Functionals{u.data(), s.y2(k),      m.data(),      s.y4(k),
                     v.data(), r.data(),     nn.data(),     s.d3x(k),
                     s.delta1(k), s.ddelta1(k), d};
}

}  // namespace

Eigen::VectorXd xi1(const SensitivityPath& s, int k, double dx_floor) {
  return xi1_impl(from_path(s, k), dx_floor);
}

Eigen::MatrixXd xi2(const SensitivityPath& s, int k, double dx_floor) {
  return xi2_impl(from_path(s, k), dx_floor);
}

ScoreSample score_sample(const SensitivityPath& s, int k, double dx_floor,
                         Eigen::VectorXd theta) {
  ScoreSample out;
  Functionals f = from_path(s, k);
  out.xi1 = xi1_impl(f, dx_floor);
  out.xi2 = xi2_impl(f, dx_floor);
  out.t = static_cast<double>(k);
  out.theta = std::move(theta);
  return out;
}

void xi_from_interval(const IntervalResult& iv, double dx_floor,
                      Eigen::VectorXd& xi1_out, Eigen::MatrixXd& xi2_out) {
  int d = static_cast<int>(iv.y1.size());
  Functionals f{iv.y1.data(),      iv.y2,           iv.y3.data(),
                iv.y4,             iv.theta2.data(), iv.dtheta2.data(),
                iv.d2y1.data(),    iv.d3x,          iv.delta1,
                iv.ddelta1,        d};
  xi1_out = xi1_impl(f, dx_floor);
  xi2_out = xi2_impl(f, dx_floor);
}

}  // namespace levyest
