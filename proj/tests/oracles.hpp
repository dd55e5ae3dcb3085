// Test-only oracles, independent of the library's eigensolver path.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "bandlab/types.hpp"

namespace oracles {

// det(G - x I) for Hermitian G and real x is real; eigenvalues are its roots.
inline double charpoly(const bandlab::ComplexMatrix& g, double x) {
  const bandlab::ComplexMatrix shifted =
      g - x * bandlab::ComplexMatrix::Identity(g.rows(), g.cols());
  return Eigen::PartialPivLU<bandlab::ComplexMatrix>(shifted).determinant().real();
}

// Eigenvalues of a small Hermitian matrix by scanning det(G - x I) for sign
// changes and bisecting each bracket. Assumes simple eigenvalues (true almost
// surely for the random inputs it is used on).
inline std::vector<double> charpoly_eigenvalues(const bandlab::ComplexMatrix& g,
                                                int scan_points = 40000) {
  // Gershgorin enclosure
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    double radius = 0.0;
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      if (i != j) radius += std::abs(g(i, j));
    lo = std::min(lo, g(i, i).real() - radius);
    hi = std::max(hi, g(i, i).real() + radius);
  }
  lo -= 1e-6;
  hi += 1e-6;

  std::vector<double> roots;
  double prev_x = lo;
  double prev_det = charpoly(g, lo);
  for (int k = 1; k <= scan_points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / scan_points;
    const double det = charpoly(g, x);
    if ((prev_det < 0 && det > 0) || (prev_det > 0 && det < 0)) {
      double a = prev_x, b = x, fa = prev_det;
      for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = charpoly(g, mid);
        if ((fa < 0) == (fm < 0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    } else if (det == 0.0) {
      roots.push_back(x);
    }
    prev_x = x;
    prev_det = det;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Marchenko-Pastur density (square case), supported on [0, 4].
inline double mp_density(double x) {
  if (x <= 0.0 || x >= 4.0) return 0.0;
  return std::sqrt(x * (4.0 - x)) / (2.0 * M_PI * x);
}

}  // namespace oracles
