// Scalar aliases and small domain types shared across the library.
#pragma once

#include <Eigen/Core>
#include <complex>
#include <stdexcept>
#include <string>

namespace bandlab {

using Complex = std::complex<double>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using ComplexMatrix = DenseMatrix<Complex>;
using ComplexVector = DenseVector<Complex>;
using RealMatrix = DenseMatrix<double>;
using RealVector = DenseVector<double>;

// A point of the open upper half-plane, the domain of every resolvent
// quantity. Construction rejects Im(z) <= 0 so downstream code can rely on
// the invariant instead of re-checking it.
class HalfPlanePoint {
 public:
  explicit HalfPlanePoint(Complex z) : z_(z) {
    if (!(z.imag() > 0.0))
      throw std::invalid_argument("HalfPlanePoint: Im(z) must be > 0, got Im(z)=" +
                                  std::to_string(z.imag()));
  }
  HalfPlanePoint(double re, double im) : HalfPlanePoint(Complex(re, im)) {}

  Complex value() const { return z_; }
  double real() const { return z_.real(); }
  double imag() const { return z_.imag(); }

 private:
  Complex z_;
};

// Fixed-point solver failed to reach the requested tolerance. Carries the
// best iterate so callers can inspect or keep partial results.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, Complex best, double res, int iters)
      : std::runtime_error(what), best_iterate(best), residual(res), iterations(iters) {}

  Complex best_iterate;
  double residual;
  int iterations;
};

// A denominator that must stay away from zero got within guard distance.
// Cannot happen for arguments inside the half-plane; guards numerical abuse.
class SingularityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Eigensolver or linear solver failed internally.
class ComputationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bandlab
