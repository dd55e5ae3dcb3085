// Gram matrices, Hermitian spectra, empirical spectral distributions and
// their Stieltjes transforms.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "bandlab/band.hpp"
#include "bandlab/rng.hpp"
#include "bandlab/types.hpp"

namespace bandlab {

// Sorted nonnegative spectrum of a Gram matrix.
struct EsdSample {
  RealVector eigenvalues;  // ascending

  int size() const { return static_cast<int>(eigenvalues.size()); }

  // Fraction of eigenvalues strictly above x: mu(x, inf).
  double tail_fraction(double x) const {
    const double* begin = eigenvalues.data();
    const double* end = begin + eigenvalues.size();
    return static_cast<double>(end - std::upper_bound(begin, end, x)) /
           static_cast<double>(eigenvalues.size());
  }
};

// Y Y^*, exactly Hermitian by construction (one triangle computed, mirrored).
template <typename Derived>
DenseMatrix<typename Derived::Scalar> gram(const Eigen::MatrixBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  DenseMatrix<Scalar> g = DenseMatrix<Scalar>::Zero(y.rows(), y.rows());
  g.template selfadjointView<Eigen::Lower>().rankUpdate(y.derived());
  g.template triangularView<Eigen::StrictlyUpper>() =
      g.adjoint().template triangularView<Eigen::StrictlyUpper>();
  g.diagonal() = g.diagonal().real().template cast<Scalar>();
  return g;
}

// Full spectrum of a Hermitian PSD matrix, ascending. Rejects inputs that are
// non-Hermitian beyond 1e-10 relative asymmetry or that carry a genuinely
// negative eigenvalue; round-off negatives below 1e-10 * ||G|| clamp to 0.
template <typename Derived>
EsdSample eigenvalues_hermitian(const Eigen::MatrixBase<Derived>& g) {
  using Scalar = typename Derived::Scalar;
  const DenseMatrix<Scalar>& mat = g.derived();
  if (mat.rows() != mat.cols())
    throw std::invalid_argument("eigenvalues_hermitian: matrix must be square");
  const double scale = mat.cwiseAbs().maxCoeff();
  const double asym = (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1e-300))
    throw std::invalid_argument("eigenvalues_hermitian: relative asymmetry " +
                                std::to_string(asym / scale) + " exceeds 1e-10");

  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(mat, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw ComputationError("eigenvalues_hermitian: eigensolver did not converge");

  RealVector vals = solver.eigenvalues();
  const double norm = std::max(std::abs(vals(0)), std::abs(vals(vals.size() - 1)));
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) >= 0.0) break;
    if (-vals(i) < 1e-10 * std::max(norm, 1e-300))
      vals(i) = 0.0;
    else
      throw std::invalid_argument("eigenvalues_hermitian: eigenvalue " +
                                  std::to_string(vals(i)) + " is negative beyond Gram round-off");
  }
  std::sort(vals.data(), vals.data() + vals.size());
  return EsdSample{std::move(vals)};
}

// Spectrum of Y Y^* for a band matrix Y.
template <typename Scalar>
EsdSample gram_spectrum(const BandMatrixT<Scalar>& y) {
  return eigenvalues_hermitian(gram(y.entries));
}

// m_n(z) = (1/n) sum 1/(lambda_i - z). For nonnegative spectra and z in the
// upper half-plane this automatically satisfies Im m > 0 and |m| <= 1/Im z.
inline Complex empirical_stieltjes(const EsdSample& esd, HalfPlanePoint z) {
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < esd.eigenvalues.size(); ++i)
    acc += 1.0 / (esd.eigenvalues(i) - z.value());
  return acc / static_cast<double>(esd.eigenvalues.size());
}

// sup_x |F_n(x) - cdf(x)| for a nondecreasing right-continuous cdf. The sup
// is attained approaching an eigenvalue from the left or sitting on it, so it
// is evaluated exactly at v and at the floating-point predecessor of v (which
// reads off the cdf's left limit even when the cdf jumps exactly at v).
template <typename Cdf>
double kolmogorov_distance(const EsdSample& esd, Cdf&& cdf) {
  const auto& v = esd.eigenvalues;
  const double n = static_cast<double>(v.size());
  double sup = 0.0;
  Eigen::Index i = 0;
  while (i < v.size()) {
    Eigen::Index j = i;
    while (j + 1 < v.size() && v(j + 1) == v(i)) ++j;  // ties jump together
    const double left = cdf(std::nextafter(v(i), -std::numeric_limits<double>::infinity()));
    const double right = cdf(v(i));
    sup = std::max(sup, std::abs(static_cast<double>(i) / n - left));
    sup = std::max(sup, std::abs(static_cast<double>(j + 1) / n - right));
    i = j + 1;
  }
  return sup;
}

// Exact sup-CDF distance between two empirical spectral distributions.
inline double ecdf_sup_distance(const EsdSample& a, const EsdSample& b) {
  const auto& x = a.eigenvalues;
  const auto& y = b.eigenvalues;
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  Eigen::Index i = 0, j = 0;
  double sup = 0.0;
  while (i < x.size() || j < y.size()) {
    double t;
    if (i >= x.size())
      t = y(j);
    else if (j >= y.size())
      t = x(i);
    else
      t = std::min(x(i), y(j));
    while (i < x.size() && x(i) == t) ++i;
    while (j < y.size() && y(j) == t) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return sup;
}

// Largest eigenvalue of a Hermitian PSD operator given only matrix-vector
// products, via Lanczos with full reorthogonalization. The start vector is
// drawn from `seed`, so the result is a pure function of (operator, seed).
template <typename Scalar, typename Apply>
double largest_eigenvalue_lanczos(int n, Apply&& apply, std::uint64_t seed,
                                  double tol = 1e-12, int max_steps = 400) {
  using Vector = DenseVector<Scalar>;
  max_steps = std::min(max_steps, n);

  rng::NoiseSampler sampler(rng::NoiseKind::RealGaussian, seed);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = Scalar(sampler.gaussian());
  v /= v.norm();

  std::vector<Vector> basis;
  basis.reserve(max_steps);
  RealVector alpha(max_steps), beta(max_steps);
  double prev = 0.0;
  int stable = 0;
  int k = 0;
  Eigen::SelfAdjointEigenSolver<RealMatrix> small;

  for (; k < max_steps; ++k) {
    basis.push_back(v);
    Vector w = apply(v);
    alpha(k) = std::real(Scalar(v.dot(w)));
    w -= alpha(k) * v;
    if (k > 0) w -= beta(k - 1) * basis[k - 1];
    for (const Vector& u : basis) w -= u.dot(w) * u;  // full reorthogonalization
    beta(k) = w.norm();

    double top = alpha(0);
    if (k >= 1) {
      small.computeFromTridiagonal(alpha.head(k + 1), beta.head(k), Eigen::EigenvaluesOnly);
      top = small.eigenvalues()(k);
    }
    // The top Ritz value increases monotonically; a two-step plateau at
    // relative width tol is the convergence signal.
    if (k >= 1 && std::abs(top - prev) <= tol * std::max(std::abs(top), 1e-300)) {
      if (++stable >= 2) return top;
    } else {
      stable = 0;
    }
    prev = top;

    if (beta(k) < 1e-13 * std::max(std::abs(alpha(k)), 1.0)) return top;  // invariant subspace
    v = w / beta(k);
  }
  return prev;
}

// ||X X^*|| for a band matrix, without forming the Gram matrix.
template <typename Scalar>
double gram_operator_norm(const BandMatrixT<Scalar>& x, std::uint64_t seed) {
  const auto& m = x.entries;
  auto apply = [&m](const DenseVector<Scalar>& v) -> DenseVector<Scalar> {
    return m * (m.adjoint() * v);
  };
  return largest_eigenvalue_lanczos<Scalar>(static_cast<int>(m.rows()), apply, seed);
}

}  // namespace bandlab
