#include "levyest/levy_noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "levyest/csv.hpp"

namespace levyest {

void NoiseConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw validation_error("alpha must lie in (0, 2)");
  if (!(u_max > 0.0)) throw validation_error("u_max must be positive");
  if (!(eps_cut > 0.0 && eps_cut < u_max))
    throw validation_error("eps_cut must satisfy 0 < eps_cut < u_max");
  if (!(scale > 0.0)) throw validation_error("scale must be positive");
  if (!(horizon >= 0.0)) throw validation_error("horizon must be non-negative");
  if (!(rho_scale > 0.0)) throw validation_error("rho_scale must be positive");
  double expected_jumps = jump_intensity(*this) * horizon;
  if (expected_jumps > 5e7)
    throw validation_error("expected jump count " + std::to_string(expected_jumps) +
                           " exceeds the 5e7 guard; raise eps_cut or lower scale");
}

double levy_density(double u, const NoiseConfig& cfg) {
  if (u == 0.0) throw domain_error("levy density undefined at u = 0");
  double a = std::abs(u);
  if (a < cfg.eps_cut || a > cfg.u_max) return 0.0;
  return cfg.scale * std::pow(a, -1.0 - cfg.alpha);
}

double levy_density_prime(double u, const NoiseConfig& cfg) {
  if (u == 0.0) throw domain_error("levy density undefined at u = 0");
  double a = std::abs(u);
  if (a < cfg.eps_cut || a > cfg.u_max) return 0.0;
  double sign = u > 0.0 ? 1.0 : -1.0;
  return -(1.0 + cfg.alpha) * cfg.scale * std::pow(a, -2.0 - cfg.alpha) * sign;
}

double jump_intensity(const NoiseConfig& cfg) {
  return 2.0 * cfg.scale *
         (std::pow(cfg.eps_cut, -cfg.alpha) - std::pow(cfg.u_max, -cfg.alpha)) /
         cfg.alpha;
}

double variance_rate(const NoiseConfig& cfg) {
  double p = 2.0 - cfg.alpha;
  return 2.0 * cfg.scale * (std::pow(cfg.u_max, p) - std::pow(cfg.eps_cut, p)) / p;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

// Inverse CDF of the one-sided size density ~ u^(-1-alpha) on [eps, u_max].
double inverse_size_cdf(double v, const NoiseConfig& cfg) {
  double lo = std::pow(cfg.eps_cut, -cfg.alpha);
  double hi = std::pow(cfg.u_max, -cfg.alpha);
  return std::pow(lo - v * (lo - hi), -1.0 / cfg.alpha);
}

}  // namespace

void sample_path_into(const NoiseConfig& cfg, std::uint64_t seed, NoisePath& out) {
  cfg.validate();
  out.config = cfg;
  out.config.seed = seed;
  // The sampler realizes every jump directly, so the compensated small-jump
  // band of the decomposition contributes its mean back to the drift; the
  // band integral of u*sigma vanishes for the symmetric density.
  out.c_eff = cfg.c;
  out.jumps.clear();

  Rng rng(derive_seed(seed, {stream_tag("levy-noise")}));
  double lambda = jump_intensity(cfg);
  std::uint64_t n = cfg.horizon > 0.0 ? rng.poisson(lambda * cfg.horizon) : 0;
  out.jumps.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    double t = rng.uniform(0.0, cfg.horizon);
    double u = inverse_size_cdf(rng.uniform(), cfg);
    if (rng.coin()) u = -u;
    out.jumps.push_back({t, u});
  }
  std::sort(out.jumps.begin(), out.jumps.end(),
            [](const Jump& a, const Jump& b) { return a.t < b.t; });
}

NoisePath sample_path(const NoiseConfig& cfg, std::uint64_t seed) {
  NoisePath p;
  sample_path_into(cfg, seed, p);
  return p;
}

NoisePath sample_path(const NoiseConfig& cfg) { return sample_path(cfg, cfg.seed); }

double NoisePath::increment(double t0, double t1) const {
  if (t0 < 0.0 || t1 > config.horizon * (1.0 + 1e-12) || t0 > t1)
    throw validation_error("increment interval outside [0, T]");
  auto lo = std::upper_bound(jumps.begin(), jumps.end(), t0,
                             [](double t, const Jump& j) { return t < j.t; });
  auto hi = std::upper_bound(jumps.begin(), jumps.end(), t1,
                             [](double t, const Jump& j) { return t < j.t; });
  double s = c_eff * (t1 - t0);
  for (auto it = lo; it != hi; ++it) s += it->u;
  return s;
}

void NoisePath::to_csv(const std::string& path) const {
  CsvWriter w(path, "noise-path");
  std::ostringstream cfgline;
  cfgline << "alpha=" << CsvWriter::num(config.alpha)
          << " u_max=" << CsvWriter::num(config.u_max)
          << " eps_cut=" << CsvWriter::num(config.eps_cut)
          << " c=" << CsvWriter::num(config.c)
          << " scale=" << CsvWriter::num(config.scale)
          << " horizon=" << CsvWriter::num(config.horizon) << " seed=" << config.seed
          << " c_eff=" << CsvWriter::num(c_eff);
  w.comment(cfgline.str());
  w.header({"t", "u"});
  for (const Jump& j : jumps) w.row({CsvWriter::num(j.t), CsvWriter::num(j.u)});
}

NoisePath NoisePath::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open '" + path + "'");
  NoisePath p;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        if (key == "alpha") p.config.alpha = std::stod(val);
        else if (key == "u_max") p.config.u_max = std::stod(val);
        else if (key == "eps_cut") p.config.eps_cut = std::stod(val);
        else if (key == "c") p.config.c = std::stod(val);
        else if (key == "scale") p.config.scale = std::stod(val);
        else if (key == "horizon") p.config.horizon = std::stod(val);
        else if (key == "seed") p.config.seed = std::stoull(val);
        else if (key == "c_eff") p.c_eff = std::stod(val);
      }
      continue;
    }
    if (line.rfind("t,", 0) == 0) continue;  // header row
    auto cells = csv_split(line);
    if (cells.size() != 2) throw error("malformed noise CSV row: " + line);
    p.jumps.push_back({std::stod(cells[0]), std::stod(cells[1])});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Weight functions
// ---------------------------------------------------------------------------

namespace {

// Quintic smoothstep on [0,1]: C^2 junctions with the constant pieces.
double smoothstep(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
double smoothstep_d1(double t) {
  double one = 1.0 - t;
  return 30.0 * t * t * one * one;
}
double smoothstep_d2(double t) { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }

struct Bump {
  double eps, r_lo, r_hi, u_max;

  explicit Bump(const NoiseConfig& cfg) {
    eps = cfg.eps_cut;
    u_max = cfg.u_max;
    double rise = std::min(eps, 0.2 * (u_max - eps));
    r_lo = eps + rise;
    r_hi = std::max(0.5 * u_max, r_lo);
  }

  // psi(|u|) and its first two derivatives in t = |u|
  void eval(double t, double& v, double& d1, double& d2) const {
    if (t <= eps || t >= u_max) {
      v = d1 = d2 = 0.0;
      return;
    }
    if (t < r_lo) {
      double w = r_lo - eps;
      double s = (t - eps) / w;
      v = smoothstep(s);
      d1 = smoothstep_d1(s) / w;
      d2 = smoothstep_d2(s) / (w * w);
      return;
    }
    if (t <= r_hi) {
      v = 1.0;
      d1 = d2 = 0.0;
      return;
    }
    double w = u_max - r_hi;
    double s = (t - r_hi) / w;
    v = 1.0 - smoothstep(s);
    d1 = -smoothstep_d1(s) / w;
    d2 = -smoothstep_d2(s) / (w * w);
  }
};

}  // namespace

void flat_region(const NoiseConfig& cfg, double& lo, double& hi) {
  Bump b(cfg);
  lo = b.r_lo;
  hi = b.r_hi;
}

double rho(double u, const NoiseConfig& cfg) {
  if (u == 0.0) throw domain_error("rho undefined at u = 0");
  double v, d1, d2;
  Bump(cfg).eval(std::abs(u), v, d1, d2);
  return cfg.rho_scale * u * v;
}

double rho_prime(double u, const NoiseConfig& cfg) {
  if (u == 0.0) throw domain_error("rho undefined at u = 0");
  double t = std::abs(u);
  double v, d1, d2;
  Bump(cfg).eval(t, v, d1, d2);
  // d/du [u psi(|u|)] = psi + |u| psi'
  return cfg.rho_scale * (v + t * d1);
}

double rho_second(double u, const NoiseConfig& cfg) {
  if (u == 0.0) throw domain_error("rho undefined at u = 0");
  double t = std::abs(u);
  double sgn = u > 0.0 ? 1.0 : -1.0;
  double v, d1, d2;
  Bump(cfg).eval(t, v, d1, d2);
  return cfg.rho_scale * sgn * (2.0 * d1 + t * d2);
}

double weight_g(double u, const NoiseConfig& cfg) {
  double a = std::abs(u);
  if (u == 0.0 || a < cfg.eps_cut || a > cfg.u_max)
    throw domain_error("g undefined outside the jump support");
  return rho_prime(u, cfg) - (1.0 + cfg.alpha) * rho(u, cfg) / u;
}

double weight_g_prime(double u, const NoiseConfig& cfg) {
  double a = std::abs(u);
  if (u == 0.0 || a < cfg.eps_cut || a > cfg.u_max)
    throw domain_error("g undefined outside the jump support");
  double r = rho(u, cfg);
  double rp = rho_prime(u, cfg);
  return rho_second(u, cfg) - (1.0 + cfg.alpha) * (rp * u - r) / (u * u);
}

}  // namespace levyest
