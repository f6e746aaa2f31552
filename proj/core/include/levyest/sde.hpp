#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "levyest/drift_model.hpp"
#include "levyest/levy_noise.hpp"

namespace levyest {

struct SimConfig {
  double h = 1.0;     // observation step
  int n = 1;          // number of observations
  double x0 = 0.0;    // initial state
  int substeps = 1;   // Euler substeps per observation interval

  void validate() const;
};

/// Discrete observations X_0, X_h, ..., X_nh.
struct Trajectory {
  SimConfig sim;
  std::vector<double> theta;
  NoiseConfig noise_config;  // seed included: the path is reproducible
  std::vector<double> states;  // n+1 values

  double time(int k) const { return sim.h * k; }
  int n_obs() const { return sim.n; }

  /// Sample standard deviation of the one-step increments.
  double increment_sd() const;

  void to_csv(const std::string& path, const std::string& model_source) const;
};

/// Stochastic derivatives of the jump part at the horizon.
struct JumpDerivatives {
  double dz = 0.0;       // D Z
  double d2z = 0.0;      // D^2 Z
  double d3z = 0.0;      // D^3 Z
  double delta1 = 0.0;   // Skorokhod integral delta(1)
  double ddelta1 = 0.0;  // D delta(1)
};

/// All sensitivity processes at the observation grid.  Vectors are indexed by
/// grid point k in [0, n]; parameter-indexed blocks are flattened row-major,
/// symmetric parameter pairs in triangular order.
class SensitivityPath {
public:
  SensitivityPath(int dim, int n);

  int dim() const { return dim_; }
  int n_obs() const { return n_; }

  // dX/dtheta_a, D X, D dX/dtheta_a, D^2 X
  double y1(int k, int a) const { return y1_[idx1(k, a)]; }
  double y2(int k) const { return y2_[static_cast<std::size_t>(k)]; }
  double y3(int k, int a) const { return y3_[idx1(k, a)]; }
  double y4(int k) const { return y4_[static_cast<std::size_t>(k)]; }
  // second parameter derivative and its stochastic derivative
  double theta2(int k, int a, int b) const { return v_[idx2(k, a, b)]; }
  double dtheta2(int k, int a, int b) const { return r_[idx2(k, a, b)]; }
  // D^2 dX/dtheta_a and D^3 X
  double d2y1(int k, int a) const { return n_arr_[idx1(k, a)]; }
  double d3x(int k) const { return s_[static_cast<std::size_t>(k)]; }
  // cumulative jump-derivative trackers
  double dz(int k) const { return dz_[static_cast<std::size_t>(k)]; }
  double d2z(int k) const { return d2z_[static_cast<std::size_t>(k)]; }
  double d3z(int k) const { return d3z_[static_cast<std::size_t>(k)]; }
  double delta1(int k) const { return del1_[static_cast<std::size_t>(k)]; }
  double ddelta1(int k) const { return ddel1_[static_cast<std::size_t>(k)]; }

  struct Row {
    std::span<double> y1, y3, v, r, n2;
    double* y2;
    double* y4;
    double* s;
    double* dz;
    double* d2z;
    double* d3z;
    double* del1;
    double* ddel1;
  };
  Row row(int k);

private:
  std::size_t idx1(int k, int a) const {
    return static_cast<std::size_t>(k) * dim_ + static_cast<std::size_t>(a);
  }
  std::size_t idx2(int k, int a, int b) const;

  int dim_, n_;
  std::size_t tri_;
  std::vector<double> y1_, y2_, y3_, y4_, v_, r_, n_arr_, s_;
  std::vector<double> dz_, d2z_, d3z_, del1_, ddel1_;
};

/// Euler scheme with jumps applied at their exact times: within each substep
/// the drift is integrated to the next jump time, the jump is added, and the
/// drift resumes.  States above 1e12 in magnitude raise explosion_error.
Trajectory euler_simulate(const DriftModel& model, std::span<const double> theta,
                          const NoisePath& noise, const SimConfig& cfg);

/// Stochastic derivatives of the jump record at the horizon.
JumpDerivatives jump_derivatives(const NoisePath& path);

/// Propagates the full sensitivity system along the trajectory's own jump
/// record.  `traj` must come from euler_simulate with identical inputs.
SensitivityPath propagate_sensitivities(const DriftModel& model,
                                        std::span<const double> theta,
                                        const NoisePath& noise,
                                        const Trajectory& traj);

/// Single-interval simulation used by bridge replicas: starts at `x0`,
/// runs over [0, noise.config.horizon] with the given substep count, and
/// returns the terminal state plus terminal sensitivities (row 1 of a
/// one-observation SensitivityPath).  Light enough for tight loops.
struct IntervalResult {
  double x_end = 0.0;
  std::vector<double> y1;  // d
  double y2 = 0.0;
  std::vector<double> y3;  // d
  double y4 = 0.0;
  std::vector<double> theta2;   // tri
  std::vector<double> dtheta2;  // tri
  std::vector<double> d2y1;     // d
  double d3x = 0.0;
  double delta1 = 0.0, ddelta1 = 0.0;
};

void simulate_interval(const DriftModel& model, std::span<const double> theta,
                       double x0, const NoisePath& noise, int substeps,
                       IntervalResult& out);

/// Endpoint-only variant: same scheme, no sensitivity propagation.  Bridge
/// loops use it to test acceptance before paying for the full system.
double simulate_interval_endpoint(const DriftModel& model,
                                  std::span<const double> theta, double x0,
                                  const NoisePath& noise, int substeps);

}  // namespace levyest
