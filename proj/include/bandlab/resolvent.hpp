// Shifted-inverse quantities of a Hermitian matrix G at complex z:
// traces, quadratic forms and diagonal entries of (G - z I)^{-1}.
//
// One Householder tridiagonalization G = Q T Q^H is factored up front; each
// z-evaluation then costs a pivoted tridiagonal solve, so many quadratic
// forms / diagonal entries amortize against a single O(n^3) step.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bandlab/types.hpp"

namespace bandlab {

// Solve (T - z I) u = rhs for symmetric real tridiagonal T, with partial
// pivoting (one fill-in superdiagonal).
inline ComplexVector shifted_tridiagonal_solve(const RealVector& diag, const RealVector& sub,
                                               Complex z, ComplexVector rhs) {
  const Eigen::Index n = diag.size();
  ComplexVector a(n), b(n), c(n);  // main, first and second superdiagonal
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i) = diag(i) - z;
    b(i) = i + 1 < n ? Complex(sub(i)) : Complex(0);
    c(i) = Complex(0);
  }
  ComplexVector lower(n > 0 ? n - 1 : 0);
  for (Eigen::Index i = 0; i + 1 < n; ++i) lower(i) = sub(i);

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(lower(i)) > std::abs(a(i))) {
      std::swap(a(i), lower(i));
      std::swap(b(i), a(i + 1));
      std::swap(c(i), b(i + 1));
      std::swap(rhs(i), rhs(i + 1));
    }
    if (a(i) == Complex(0)) throw ComputationError("shifted_tridiagonal_solve: zero pivot");
    const Complex factor = lower(i) / a(i);
    a(i + 1) -= factor * b(i);
    b(i + 1) -= factor * c(i);
    rhs(i + 1) -= factor * rhs(i);
  }
  ComplexVector u(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Complex acc = rhs(i);
    if (i + 1 < n) acc -= b(i) * u(i + 1);
    if (i + 2 < n) acc -= c(i) * u(i + 2);
    if (a(i) == Complex(0)) throw ComputationError("shifted_tridiagonal_solve: zero pivot");
    u(i) = acc / a(i);
  }
  return u;
}

template <typename Scalar>
class HermitianResolvent {
 public:
  explicit HermitianResolvent(const DenseMatrix<Scalar>& g)
      : tri_(g), diag_(tri_.diagonal()), sub_(tri_.subDiagonal()) {}

  Eigen::Index size() const { return diag_.size(); }

  const RealVector& eigenvalues() const {
    if (eigs_.size() == 0) {
      Eigen::SelfAdjointEigenSolver<RealMatrix> solver;
      solver.computeFromTridiagonal(diag_, sub_, Eigen::EigenvaluesOnly);
      eigs_ = solver.eigenvalues();
    }
    return eigs_;
  }

  // tr (G - z I)^{-1}
  Complex trace_resolvent(Complex z) const {
    const RealVector& eigs = eigenvalues();
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) acc += 1.0 / (eigs(i) - z);
    return acc;
  }

  // x^H (G - z I)^{-1} y
  Complex bilinear_form(const DenseVector<Scalar>& x, const DenseVector<Scalar>& y,
                        Complex z) const {
    ComplexVector wx = rotate(x);
    ComplexVector wy = rotate(y);
    ComplexVector u = shifted_tridiagonal_solve(diag_, sub_, z, std::move(wy));
    return wx.dot(u);
  }

  Complex quadratic_form(const DenseVector<Scalar>& x, Complex z) const {
    return bilinear_form(x, x, z);
  }

  // x^H (G - z I)^{-1} y with a complex-valued right factor.
  Complex bilinear_form_mixed(const DenseVector<Scalar>& x, const ComplexVector& y,
                              Complex z) const {
    ComplexVector wx = rotate(x);
    ComplexVector wy = rotate_complex(y);
    ComplexVector u = shifted_tridiagonal_solve(diag_, sub_, z, std::move(wy));
    return wx.dot(u);
  }

  // Diagonal entries ((G - z I)^{-1})_{kk} for the requested 0-based indices.
  std::vector<Complex> resolvent_diagonal(const std::vector<int>& indices, Complex z) const {
    const Eigen::Index n = size();
    DenseMatrix<Scalar> block = DenseMatrix<Scalar>::Zero(n, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) block(indices[c], static_cast<Eigen::Index>(c)) = Scalar(1);
    block.applyOnTheLeft(tri_.matrixQ().adjoint());
    std::vector<Complex> out(indices.size());
    for (std::size_t c = 0; c < indices.size(); ++c) {
      ComplexVector w = block.col(static_cast<Eigen::Index>(c)).template cast<Complex>();
      ComplexVector u = shifted_tridiagonal_solve(diag_, sub_, z, w);
      Complex acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += std::conj(w(i)) * u(i);
      out[c] = acc;
    }
    return out;
  }

 private:
  ComplexVector rotate(const DenseVector<Scalar>& x) const {
    DenseVector<Scalar> w = x;
    w.applyOnTheLeft(tri_.matrixQ().adjoint());
    return w.template cast<Complex>();
  }

  ComplexVector rotate_complex(const ComplexVector& y) const {
    if constexpr (std::is_same_v<Scalar, Complex>) {
      ComplexVector w = y;
      w.applyOnTheLeft(tri_.matrixQ().adjoint());
      return w;
    } else {
      RealVector re = y.real();
      RealVector im = y.imag();
      re.applyOnTheLeft(tri_.matrixQ().adjoint());
      im.applyOnTheLeft(tri_.matrixQ().adjoint());
      ComplexVector w(y.size());
      w.real() = re;
      w.imag() = im;
      return w;
    }
  }

  Eigen::Tridiagonalization<DenseMatrix<Scalar>> tri_;
  RealVector diag_, sub_;
  mutable RealVector eigs_;
};

}  // namespace bandlab
