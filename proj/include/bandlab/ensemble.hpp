// Sampling the random band matrix, realizing the deterministic part from a
// target measure, singular-value truncation, and model assembly
// Y = (R + sigma X) / sqrt(c).
#pragma once

#include <Eigen/SVD>
#include <cmath>
#include <cstdint>

#include "bandlab/band.hpp"
#include "bandlab/rng.hpp"
#include "bandlab/spectral_measure.hpp"

namespace bandlab {

struct EnsembleConfig {
  BandShape shape;
  double sigma = 1.0;  // > 0 for the model proper; 0 admitted as a degenerate diagnostic
  rng::NoiseKind dist = rng::NoiseKind::ComplexGaussian;
  std::uint64_t seed = 0;

  static EnsembleConfig make(BandShape shape, double sigma, rng::NoiseKind dist,
                             std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("EnsembleConfig: sigma must be finite and >= 0");
    return {shape, sigma, dist, seed};
  }
};

// iid standardized entries on every in-band position, zeros elsewhere.
// A pure function of (shape, dist, seed); entries are drawn in column-major
// order over the band support.
template <typename Scalar>
BandMatrixT<Scalar> sample_noise(const EnsembleConfig& config) {
  constexpr bool complex_storage = !std::is_same_v<Scalar, double>;
  if (!complex_storage && rng::is_complex_kind(config.dist))
    throw std::invalid_argument("sample_noise: complex distribution needs complex storage");

  rng::NoiseSampler sampler(config.dist, config.seed);
  auto out = BandMatrixT<Scalar>::zero(config.shape);
  const int n = config.shape.n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (config.shape.allows(i, j)) {
        if constexpr (complex_storage)
          out.entries(i, j) = sampler.next();
        else
          out.entries(i, j) = sampler.next_real();
      }
  return out;
}

inline BandMatrix sample_noise(const EnsembleConfig& config) {
  return sample_noise<Complex>(config);
}

// Diagonal realization of a target measure H: entry i is sqrt(c * t_i) with
// t_i the H-quantile at (i - 1/2)/n. The spectrum of (1/c) R R^* is then the
// n-point quantization of H, which converges weakly to H; for atom weights
// that are multiples of 1/n the quantization is exact.
template <typename Scalar>
BandMatrixT<Scalar> deterministic_from_measure(const SpectralMeasure& target,
                                               const BandShape& shape) {
  auto out = BandMatrixT<Scalar>::zero(shape);
  const double c = static_cast<double>(shape.row_budget());
  for (int i = 0; i < shape.n; ++i) {
    const double q = (i + 0.5) / static_cast<double>(shape.n);
    out.entries(i, i) = Scalar(std::sqrt(c * target.quantile(q)));
  }
  return out;
}

inline BandMatrix deterministic_from_measure(const SpectralMeasure& target,
                                             const BandShape& shape) {
  return deterministic_from_measure<Complex>(target, shape);
}

// Zero every singular value of R / sqrt(c) that exceeds alpha, i.e. return
// sqrt(c) * U S_alpha V^*. The result keeps the input shape tag but its
// support may leave the band; it is meant for Gram-spectrum use only.
template <typename Scalar>
BandMatrixT<Scalar> truncate_singular_values(const BandMatrixT<Scalar>& r, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("truncate_singular_values: alpha must be > 0");
  const double scale = std::sqrt(static_cast<double>(r.shape.row_budget()));
  Eigen::BDCSVD<DenseMatrix<Scalar>> svd(r.entries / scale,
                                         Eigen::ComputeThinU | Eigen::ComputeThinV);
  DenseVector<double> s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > alpha) s(i) = 0.0;
  BandMatrixT<Scalar> out{r.shape,
                          scale * (svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint())};
  return out;
}

// Count of singular values of R / sqrt(c) strictly above alpha (the rank of
// the truncation perturbation).
template <typename Scalar>
int truncated_count(const BandMatrixT<Scalar>& r, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("truncated_count: alpha must be > 0");
  const double scale = std::sqrt(static_cast<double>(r.shape.row_budget()));
  Eigen::BDCSVD<DenseMatrix<Scalar>> svd(r.entries / scale);
  const auto& s = svd.singularValues();
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > alpha) ++count;
  return count;
}

// Y = (R + sigma X) / sqrt(c), sharing the operands' common shape.
template <typename Scalar>
BandMatrixT<Scalar> assemble_signal_plus_noise(const BandMatrixT<Scalar>& deterministic,
                                               const BandMatrixT<Scalar>& noise,
                                               double sigma) {
  if (deterministic.shape != noise.shape)
    throw std::invalid_argument("assemble_signal_plus_noise: shapes differ");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("assemble_signal_plus_noise: sigma must be finite and >= 0");
  const double scale = std::sqrt(static_cast<double>(deterministic.shape.row_budget()));
  return {deterministic.shape,
          DenseMatrix<Scalar>((deterministic.entries + sigma * noise.entries) / scale)};
}

}  // namespace bandlab
