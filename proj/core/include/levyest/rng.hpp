#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace levyest {

// Seed fan-out.
//
// Every random stream in the library is keyed by the master seed plus a list
// of 64-bit words: a purpose tag (hash of a short string literal) followed by
// counters (repetition index, interval index, replica index, ...).  The key
// words are folded through splitmix64, so streams with different purposes or
// counters are decorrelated, and adding a new purpose never perturbs existing
// streams.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a string literal; used for stream purpose tags.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives a child seed from a master seed and a list of key words.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  for (std::uint64_t k : keys) s = splitmix64(s ^ k);
  return s;
}

/// Random engine used throughout; seeded via splitmix64 so that nearby seeds
/// give unrelated streams.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    std::uint64_t x = state_;
    x ^= x >> 32;
    x *= 0xd6e8feb86659fd93ULL;
    x ^= x >> 32;
    x *= 0xd6e8feb86659fd93ULL;
    x ^= x >> 32;
    return x;
  }

  /// Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  /// Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool coin() { return (next_u64() & 1u) != 0; }

  /// Standard normal via Box-Muller (used only by tests and diagnostics).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Poisson sample; inversion for small means, PTRS-style normal cutover
  /// is unnecessary here so large means use a straightforward Gaussian-free
  /// split into chunks.
  std::uint64_t poisson(double mean);

private:
  std::uint64_t state_;
};

inline std::uint64_t Rng::poisson(double mean) {
  std::uint64_t total = 0;
  // Splitting keeps exp(-mean) away from underflow for large means.
  while (mean > 500.0) {
    double chunk = 500.0;
    double l = std::exp(-chunk);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    total += k - 1;
    mean -= chunk;
  }
  double l = std::exp(-mean);
  std::uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > l);
  return total + k - 1;
}

}  // namespace levyest
