// Finitely-atomic probability measures on [0, inf).
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandlab {

// Discrete measure sum w_k delta_{t_k}; atoms are kept sorted by location.
// Weights must be positive and sum to 1 within 1e-12; locations nonnegative
// and finite, so the support is automatically compact.
struct SpectralMeasure {
  struct Atom {
    double location = 0.0;
    double weight = 1.0;
    bool operator==(const Atom&) const = default;
  };

  std::vector<Atom> atoms;

  static SpectralMeasure from_atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("SpectralMeasure: no atoms");
    double total = 0.0;
    for (const Atom& a : atoms) {
      if (!std::isfinite(a.location) || a.location < 0.0)
        throw std::invalid_argument("SpectralMeasure: atom location must be finite and >= 0, got " +
                                    std::to_string(a.location));
      if (!(a.weight > 0.0) || !std::isfinite(a.weight))
        throw std::invalid_argument("SpectralMeasure: atom weight must be > 0");
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("SpectralMeasure: weights sum to " + std::to_string(total) +
                                  ", expected 1");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    return SpectralMeasure{std::move(atoms)};
  }

  static SpectralMeasure point_mass(double location) {
    return from_atoms({{location, 1.0}});
  }

  // P[T <= x]
  double cdf(double x) const {
    double acc = 0.0;
    for (const Atom& a : atoms) {
      if (a.location > x) break;
      acc += a.weight;
    }
    return acc;
  }

  // H(x, inf) = P[T > x]
  double tail_mass(double x) const { return 1.0 - cdf(x); }

  // inf{t : cdf(t) >= q} for q in (0, 1].
  double quantile(double q) const {
    if (!(q > 0.0) || q > 1.0)
      throw std::invalid_argument("quantile: q must be in (0, 1]");
    double acc = 0.0;
    for (const Atom& a : atoms) {
      acc += a.weight;
      if (acc >= q - 1e-15) return a.location;
    }
    return atoms.back().location;
  }

  double max_location() const { return atoms.back().location; }

  bool operator==(const SpectralMeasure&) const = default;
};

}  // namespace bandlab
