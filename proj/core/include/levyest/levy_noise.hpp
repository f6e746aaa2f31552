#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "levyest/errors.hpp"
#include "levyest/rng.hpp"

namespace levyest {

/// Truncated alpha-stable jump noise: intensity scale * |u|^(-1-alpha) on
/// eps_cut <= |u| <= u_max, zero elsewhere.
struct NoiseConfig {
  double alpha = 1.75;    // stability index, in (0, 2)
  double u_max = 1.0;     // jump bound
  double eps_cut = 0.01;  // small-jump truncation threshold
  double c = 0.0;         // drift constant of the Levy-Ito decomposition
  double scale = 1.0;     // multiplier of the stable density
  double horizon = 1.0;   // T
  std::uint64_t seed = 0;

  // Diagnostic multiplier of the Malliavin weight rho.  Scores are invariant
  // under it analytically; tests assert this numerically.
  double rho_scale = 1.0;

  void validate() const;
};

struct Jump {
  double t;
  double u;
};

/// One realized path of the jump noise.  Immutable once sampled.
struct NoisePath {
  NoiseConfig config;
  std::vector<Jump> jumps;  // strictly increasing times in [0, T]
  double c_eff = 0.0;

  /// c_eff*(t1-t0) + sum of jumps in (t0, t1].
  double increment(double t0, double t1) const;

  void to_csv(const std::string& path) const;
  static NoisePath from_csv(const std::string& path);
};

/// sigma_L(u); zero outside the truncated support.  u = 0 is an error.
double levy_density(double u, const NoiseConfig& cfg);
double levy_density_prime(double u, const NoiseConfig& cfg);

/// Total jump intensity lambda = integral of sigma_L.
double jump_intensity(const NoiseConfig& cfg);

/// Variance accumulated per unit time, integral of u^2 sigma_L.
double variance_rate(const NoiseConfig& cfg);

NoisePath sample_path(const NoiseConfig& cfg);
NoisePath sample_path(const NoiseConfig& cfg, std::uint64_t seed);

/// Reusable-buffer variant for hot loops (bridge replicas); `out` keeps its
/// capacity between calls.
void sample_path_into(const NoiseConfig& cfg, std::uint64_t seed, NoisePath& out);

// Malliavin weight rho(u) = rho_scale * u * psi(|u|), where psi is a C^2 bump
// vanishing at both support endpoints (so that sigma*rho -> 0 there), equal
// to 1 on a central flat region, with quintic-smoothstep transitions.
double rho(double u, const NoiseConfig& cfg);
double rho_prime(double u, const NoiseConfig& cfg);
double rho_second(double u, const NoiseConfig& cfg);

/// g = (sigma rho)'/sigma = rho' - (1+alpha) rho/u on the support.
double weight_g(double u, const NoiseConfig& cfg);
double weight_g_prime(double u, const NoiseConfig& cfg);

/// Bounds of the region where psi == 1, for tests that need flat-region jumps.
void flat_region(const NoiseConfig& cfg, double& lo, double& hi);

}  // namespace levyest
