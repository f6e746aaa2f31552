#include "levyest/sde.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "levyest/csv.hpp"

namespace levyest {

namespace {
constexpr double kExplosionGuard = 1e12;
}

void SimConfig::validate() const {
  if (!(h > 0.0)) throw validation_error("h must be positive");
  if (n < 1) throw validation_error("n must be at least 1");
  if (substeps < 1) throw validation_error("substeps must be at least 1");
}

double Trajectory::increment_sd() const {
  if (states.size() < 3) return 0.0;
  std::size_t m = states.size() - 1;
  double mean = 0.0;
  for (std::size_t k = 0; k < m; ++k) mean += states[k + 1] - states[k];
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double d = states[k + 1] - states[k] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(m - 1));
}

void Trajectory::to_csv(const std::string& path, const std::string& model_source) const {
  CsvWriter w(path, "trajectory");
  std::string th;
  for (std::size_t i = 0; i < theta.size(); ++i)
    th += (i ? " " : "") + CsvWriter::num(theta[i]);
  w.comment("model " + model_source);
  w.comment("theta " + th);
  w.comment("alpha " + CsvWriter::num(noise_config.alpha) + " h " +
            CsvWriter::num(sim.h) + " n " + CsvWriter::num(std::size_t(sim.n)) +
            " seed " + std::to_string(noise_config.seed));
  w.header({"k", "t", "X"});
  for (std::size_t k = 0; k < states.size(); ++k)
    w.row({CsvWriter::num(k), CsvWriter::num(time(static_cast<int>(k))),
           CsvWriter::num(states[k])});
}

SensitivityPath::SensitivityPath(int dim, int n)
    : dim_(dim), n_(n), tri_(static_cast<std::size_t>(dim) * (dim + 1) / 2) {
  std::size_t rows = static_cast<std::size_t>(n) + 1;
  y1_.assign(rows * dim_, 0.0);
  y2_.assign(rows, 0.0);
  y3_.assign(rows * dim_, 0.0);
  y4_.assign(rows, 0.0);
  v_.assign(rows * tri_, 0.0);
  r_.assign(rows * tri_, 0.0);
  n_arr_.assign(rows * dim_, 0.0);
  s_.assign(rows, 0.0);
  dz_.assign(rows, 0.0);
  d2z_.assign(rows, 0.0);
  d3z_.assign(rows, 0.0);
  del1_.assign(rows, 0.0);
  ddel1_.assign(rows, 0.0);
}

std::size_t SensitivityPath::idx2(int k, int a, int b) const {
  if (a > b) std::swap(a, b);
  std::size_t t = static_cast<std::size_t>(a) * dim_ -
                  static_cast<std::size_t>(a) * (a - 1) / 2 +
                  static_cast<std::size_t>(b - a);
  return static_cast<std::size_t>(k) * tri_ + t;
}

SensitivityPath::Row SensitivityPath::row(int k) {
  std::size_t kk = static_cast<std::size_t>(k);
  return Row{std::span<double>(y1_.data() + kk * dim_, dim_),
             std::span<double>(y3_.data() + kk * dim_, dim_),
             std::span<double>(v_.data() + kk * tri_, tri_),
             std::span<double>(r_.data() + kk * tri_, tri_),
             std::span<double>(n_arr_.data() + kk * dim_, dim_),
             &y2_[kk],
             &y4_[kk],
             &s_[kk],
             &dz_[kk],
             &d2z_[kk],
             &d3z_[kk],
             &del1_[kk],
             &ddel1_[kk]};
}

// ---------------------------------------------------------------------------
// Stepping engine
// ---------------------------------------------------------------------------

namespace {

struct StepState {
  int d = 0;
  std::size_t tri = 0;
  double x = 0.0;
  std::vector<double> u;   // dX/dtheta
  double w = 0.0;          // DX
  std::vector<double> m;   // D dX/dtheta
  double p = 0.0;          // D^2 X
  std::vector<double> v;   // d2X/dtheta2, triangular
  std::vector<double> r;   // D of v
  std::vector<double> nn;  // D^2 dX/dtheta
  double s = 0.0;          // D^3 X
  double dz = 0.0, d2z = 0.0, d3z = 0.0, del1 = 0.0, ddel1 = 0.0;

  // scratch for drift derivatives at the current state
  std::vector<double> ath, axth, axxth, athth, axthth;
  std::vector<double> u_new, m_new, v_new, r_new, nn_new;

  void reset(int dim, double x0) {
    d = dim;
    tri = static_cast<std::size_t>(dim) * (dim + 1) / 2;
    x = x0;
    u.assign(d, 0.0);
    m.assign(d, 0.0);
    v.assign(tri, 0.0);
    r.assign(tri, 0.0);
    nn.assign(d, 0.0);
    w = p = s = 0.0;
    dz = d2z = d3z = del1 = ddel1 = 0.0;
    ath.assign(d, 0.0);
    axth.assign(d, 0.0);
    axxth.assign(d, 0.0);
    athth.assign(tri, 0.0);
    axthth.assign(tri, 0.0);
    u_new.assign(d, 0.0);
    m_new.assign(d, 0.0);
    v_new.assign(tri, 0.0);
    r_new.assign(tri, 0.0);
    nn_new.assign(d, 0.0);
  }

  std::size_t t2(int a, int b) const {
    if (a > b) std::swap(a, b);
    return static_cast<std::size_t>(a) * d - static_cast<std::size_t>(a) * (a - 1) / 2 +
           static_cast<std::size_t>(b - a);
  }
};

// One drift step of length dt: the Euler update and its exact derivatives
// in theta and in the jump sizes (through the weight rho).
void advance_drift(StepState& st, double dt, const DriftModel& model,
                   std::span<const double> theta, double c_eff, bool with_sens) {
  if (dt <= 0.0) return;
  const double a0 = model.compiled(0).eval(st.x, theta);
  if (!with_sens) {
    st.x += (a0 + c_eff) * dt;
    return;
  }
  const int d = st.d;
  const double ax = model.compiled(1).eval(st.x, theta);
  const double axx = model.compiled(2).eval(st.x, theta);
  const double axxx = model.compiled(3).eval(st.x, theta);
  for (int a = 0; a < d; ++a) {
    st.ath[a] = model.compiled(0, a).eval(st.x, theta);
    st.axth[a] = model.compiled(1, a).eval(st.x, theta);
    st.axxth[a] = model.compiled(2, a).eval(st.x, theta);
  }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      st.athth[st.t2(a, b)] = model.compiled(0, a, b).eval(st.x, theta);
      st.axthth[st.t2(a, b)] = model.compiled(1, a, b).eval(st.x, theta);
    }

  const double w = st.w, p = st.p, s = st.s;
  for (int a = 0; a < d; ++a) {
    st.u_new[a] = st.u[a] + (ax * st.u[a] + st.ath[a]) * dt;
    st.m_new[a] =
        st.m[a] + (axx * w * st.u[a] + st.axth[a] * w + ax * st.m[a]) * dt;
    st.nn_new[a] = st.nn[a] + (axxx * w * w * st.u[a] + axx * p * st.u[a] +
                               2.0 * axx * w * st.m[a] + st.axxth[a] * w * w +
                               st.axth[a] * p + ax * st.nn[a]) *
                                  dt;
  }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      std::size_t t = st.t2(a, b);
      st.v_new[t] = st.v[t] + (axx * st.u[a] * st.u[b] + st.axth[b] * st.u[a] +
                               st.axth[a] * st.u[b] + ax * st.v[t] + st.athth[t]) *
                                  dt;
      st.r_new[t] =
          st.r[t] + (axxx * w * st.u[a] * st.u[b] +
                     axx * (st.m[a] * st.u[b] + st.u[a] * st.m[b]) +
                     st.axxth[b] * w * st.u[a] + st.axth[b] * st.m[a] +
                     st.axxth[a] * w * st.u[b] + st.axth[a] * st.m[b] +
                     axx * w * st.v[t] + ax * st.r[t] + st.axthth[t] * w) *
                        dt;
    }
  const double w_new = w + ax * w * dt;
  const double p_new = p + (axx * w * w + ax * p) * dt;
  const double s_new = s + (axxx * w * w * w + 3.0 * axx * w * p + ax * s) * dt;

  st.x += (a0 + c_eff) * dt;
  std::swap(st.u, st.u_new);
  std::swap(st.m, st.m_new);
  std::swap(st.v, st.v_new);
  std::swap(st.r, st.r_new);
  std::swap(st.nn, st.nn_new);
  st.w = w_new;
  st.p = p_new;
  st.s = s_new;
}

void apply_jump(StepState& st, double u, const NoiseConfig& cfg, bool with_sens) {
  st.x += u;
  if (!with_sens) return;
  const double rh = rho(u, cfg);
  const double rp = rho_prime(u, cfg);
  const double rs = rho_second(u, cfg);
  const double rr1 = (rp * rp + rh * rs) * rh;  // D of rho*rho'
  st.w += rh;
  st.p += rh * rp;
  st.s += rr1;
  st.dz += rh;
  st.d2z += rh * rp;
  st.d3z += rr1;
  double a = std::abs(u);
  if (a >= cfg.eps_cut && a <= cfg.u_max) {
    st.del1 -= weight_g(u, cfg);
    st.ddel1 -= weight_g_prime(u, cfg) * rh;
  }
}

// Runs the scheme; `record(k, state)` fires at every observation time
// including k = 0.
void run_scheme(const DriftModel& model, std::span<const double> theta,
                const NoisePath& noise, const SimConfig& cfg, bool with_sens,
                StepState& st,
                const std::function<void(int, const StepState&)>& record) {
  cfg.validate();
  noise.config.validate();
  if (static_cast<std::size_t>(model.dim()) != theta.size())
    throw validation_error("theta length does not match the model dimension");
  double total = cfg.h * cfg.n;
  if (total > noise.config.horizon * (1.0 + 1e-12))
    throw validation_error("simulation horizon exceeds the noise horizon");

  st.reset(model.dim(), cfg.x0);
  record(0, st);

  const double dt_sub = cfg.h / cfg.substeps;
  std::size_t jump_index = 0;
  double t_cur = 0.0;
  for (int k = 1; k <= cfg.n; ++k) {
    for (int ss = 1; ss <= cfg.substeps; ++ss) {
      double t_end = (k - 1) * cfg.h + ss * dt_sub;
      if (k == cfg.n && ss == cfg.substeps) t_end = total;  // avoid fp drift
      while (jump_index < noise.jumps.size() &&
             noise.jumps[jump_index].t <= t_end) {
        const Jump& j = noise.jumps[jump_index];
        advance_drift(st, std::max(j.t - t_cur, 0.0), model, theta, noise.c_eff,
                      with_sens);
        apply_jump(st, j.u, noise.config, with_sens);
        t_cur = std::max(j.t, t_cur);
        ++jump_index;
      }
      advance_drift(st, std::max(t_end - t_cur, 0.0), model, theta, noise.c_eff,
                    with_sens);
      t_cur = t_end;
      if (!std::isfinite(st.x) || std::abs(st.x) > kExplosionGuard)
        throw explosion_error("state exploded during Euler simulation",
                              static_cast<std::size_t>(k));
    }
    record(k, st);
  }
}

}  // namespace

Trajectory euler_simulate(const DriftModel& model, std::span<const double> theta,
                          const NoisePath& noise, const SimConfig& cfg) {
  Trajectory traj;
  traj.sim = cfg;
  traj.theta.assign(theta.begin(), theta.end());
  traj.noise_config = noise.config;
  traj.states.resize(static_cast<std::size_t>(cfg.n) + 1);
  StepState st;
  run_scheme(model, theta, noise, cfg, /*with_sens=*/false, st,
             [&](int k, const StepState& s) {
               traj.states[static_cast<std::size_t>(k)] = s.x;
             });
  return traj;
}

JumpDerivatives jump_derivatives(const NoisePath& path) {
  JumpDerivatives jd;
  const NoiseConfig& cfg = path.config;
  for (const Jump& j : path.jumps) {
    double rh = rho(j.u, cfg);
    double rp = rho_prime(j.u, cfg);
    double rs = rho_second(j.u, cfg);
    jd.dz += rh;
    jd.d2z += rh * rp;
    jd.d3z += (rp * rp + rh * rs) * rh;
    double a = std::abs(j.u);
    if (a >= cfg.eps_cut && a <= cfg.u_max) {
      jd.delta1 -= weight_g(j.u, cfg);
      jd.ddelta1 -= weight_g_prime(j.u, cfg) * rh;
    }
  }
  return jd;
}

SensitivityPath propagate_sensitivities(const DriftModel& model,
                                        std::span<const double> theta,
                                        const NoisePath& noise,
                                        const Trajectory& traj) {
  if (traj.states.size() != static_cast<std::size_t>(traj.sim.n) + 1)
    throw validation_error("trajectory length does not match its config");
  SensitivityPath sens(model.dim(), traj.sim.n);
  StepState st;
  run_scheme(model, theta, noise, traj.sim, /*with_sens=*/true, st,
             [&](int k, const StepState& s) {
               if (s.x != traj.states[static_cast<std::size_t>(k)])
                 throw validation_error(
                     "trajectory does not match the supplied model/noise inputs");
               auto row = sens.row(k);
               for (int a = 0; a < s.d; ++a) {
                 row.y1[a] = s.u[a];
                 row.y3[a] = s.m[a];
                 row.n2[a] = s.nn[a];
               }
               for (std::size_t t = 0; t < s.tri; ++t) {
                 row.v[t] = s.v[t];
                 row.r[t] = s.r[t];
               }
               *row.y2 = s.w;
               *row.y4 = s.p;
               *row.s = s.s;
               *row.dz = s.dz;
               *row.d2z = s.d2z;
               *row.d3z = s.d3z;
               *row.del1 = s.del1;
               *row.ddel1 = s.ddel1;
             });
  return sens;
}

double simulate_interval_endpoint(const DriftModel& model,
                                  std::span<const double> theta, double x0,
                                  const NoisePath& noise, int substeps) {
  SimConfig cfg;
  cfg.h = noise.config.horizon;
  cfg.n = 1;
  cfg.x0 = x0;
  cfg.substeps = substeps;
  static thread_local StepState st;
  double x_end = x0;
  run_scheme(model, theta, noise, cfg, /*with_sens=*/false, st,
             [&](int k, const StepState& s) {
               if (k == 1) x_end = s.x;
             });
  return x_end;
}

void simulate_interval(const DriftModel& model, std::span<const double> theta,
                       double x0, const NoisePath& noise, int substeps,
                       IntervalResult& out) {
  SimConfig cfg;
  cfg.h = noise.config.horizon;
  cfg.n = 1;
  cfg.x0 = x0;
  cfg.substeps = substeps;
  static thread_local StepState st;
  run_scheme(model, theta, noise, cfg, /*with_sens=*/true, st,
             [&](int k, const StepState& s) {
               if (k == 0) return;
               out.x_end = s.x;
               out.y1.assign(s.u.begin(), s.u.end());
               out.y2 = s.w;
               out.y3.assign(s.m.begin(), s.m.end());
               out.y4 = s.p;
               out.theta2.assign(s.v.begin(), s.v.end());
               out.dtheta2.assign(s.r.begin(), s.r.end());
               out.d2y1.assign(s.nn.begin(), s.nn.end());
               out.d3x = s.s;
               out.delta1 = s.del1;
               out.ddelta1 = s.ddel1;
             });
}

}  // namespace levyest
