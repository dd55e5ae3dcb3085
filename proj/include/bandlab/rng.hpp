// Seedable, splittable randomness with pinned variate recipes.
//
// Monte Carlo trials each draw their own engine from
// derive_stream(master_seed, trial_index), so results are identical for any
// worker count. mt19937_64's sequence is fixed by the standard; the variate
// transforms below are spelled out here (instead of <random> distributions)
// because distribution output is implementation-defined and the result tables
// must reproduce byte-for-byte.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "bandlab/types.hpp"

namespace bandlab::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Decorrelated per-stream seed for (master, index).
inline std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t s = master_seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (index + 0x9E3779B97F4A7C15ULL);
  return splitmix64(s);
}

// Entry distributions, all standardized to mean 0 and E|x|^2 = 1. The two
// Gaussian kinds in addition satisfy a Poincare inequality.
enum class NoiseKind {
  ComplexGaussian,  // (g1 + i g2)/sqrt(2)
  RealGaussian,
  Rademacher,     // +/-1
  ScaledUniform,  // uniform on [-sqrt(3), sqrt(3)]
};

inline bool is_complex_kind(NoiseKind k) { return k == NoiseKind::ComplexGaussian; }

inline double fourth_abs_moment(NoiseKind k) {
  switch (k) {
    case NoiseKind::ComplexGaussian: return 2.0;
    case NoiseKind::RealGaussian: return 3.0;
    case NoiseKind::Rademacher: return 1.0;
    case NoiseKind::ScaledUniform: return 9.0 / 5.0;
  }
  throw std::logic_error("unknown NoiseKind");
}

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::ComplexGaussian: return "complex-gaussian";
    case NoiseKind::RealGaussian: return "real-gaussian";
    case NoiseKind::Rademacher: return "rademacher";
    case NoiseKind::ScaledUniform: return "scaled-uniform";
  }
  throw std::logic_error("unknown NoiseKind");
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "complex-gaussian") return NoiseKind::ComplexGaussian;
  if (s == "real-gaussian") return NoiseKind::RealGaussian;
  if (s == "rademacher") return NoiseKind::Rademacher;
  if (s == "scaled-uniform") return NoiseKind::ScaledUniform;
  throw std::invalid_argument("unknown noise distribution: " + s);
}

class NoiseSampler {
 public:
  NoiseSampler(NoiseKind kind, std::uint64_t seed) : engine_(seed), kind_(kind) {}

  NoiseKind kind() const { return kind_; }

  // [0, 1) with 53 random bits.
  double uniform_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_unit();
    const double u2 = uniform_unit();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // One standardized draw of the configured kind.
  Complex next() {
    switch (kind_) {
      case NoiseKind::ComplexGaussian: {
        const double u1 = uniform_unit();
        const double u2 = uniform_unit();
        const double r = std::sqrt(-std::log1p(-u1));  // BM radius / sqrt(2)
        const double a = 2.0 * M_PI * u2;
        return {r * std::cos(a), r * std::sin(a)};
      }
      default:
        return {next_real(), 0.0};
    }
  }

  // Real-valued kinds only.
  double next_real() {
    switch (kind_) {
      case NoiseKind::ComplexGaussian:
        throw std::invalid_argument("next_real: complex-gaussian has no real variate");
      case NoiseKind::RealGaussian:
        return gaussian();
      case NoiseKind::Rademacher:
        return (engine_() >> 63) ? 1.0 : -1.0;
      case NoiseKind::ScaledUniform:
        return std::sqrt(3.0) * (2.0 * uniform_unit() - 1.0);
    }
    throw std::logic_error("unknown NoiseKind");
  }

 private:
  std::mt19937_64 engine_;
  NoiseKind kind_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bandlab::rng
