#include "bandlab/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "bandlab/spectra.hpp"
#include "doctest.h"

using namespace bandlab;

namespace {

const BandShape small_shape = BandShape::make(8, 2, true);

BandMatrix sample(const BandShape& shape, rng::NoiseKind kind, std::uint64_t seed) {
  return sample_noise(EnsembleConfig::make(shape, 1.0, kind, seed));
}

}  // namespace

TEST_CASE("ensemble config rejects bad sigma") {
  CHECK_THROWS_AS(EnsembleConfig::make(small_shape, -1.0, rng::NoiseKind::RealGaussian, 0),
                  std::invalid_argument);
  CHECK_NOTHROW(EnsembleConfig::make(small_shape, 0.0, rng::NoiseKind::RealGaussian, 0));
}

TEST_CASE("seed streams are deterministic and decorrelated") {
  CHECK(rng::derive_stream(1, 0) == rng::derive_stream(1, 0));
  CHECK(rng::derive_stream(1, 0) != rng::derive_stream(1, 1));
  CHECK(rng::derive_stream(1, 0) != rng::derive_stream(2, 0));
}

TEST_CASE("sampler moments per distribution kind") {
  const int count = 200000;
  for (auto kind : {rng::NoiseKind::ComplexGaussian, rng::NoiseKind::RealGaussian,
                    rng::NoiseKind::Rademacher, rng::NoiseKind::ScaledUniform}) {
    rng::NoiseSampler sampler(kind, 12345);
    Complex mean = 0.0;
    double second = 0.0, fourth = 0.0;
    for (int i = 0; i < count; ++i) {
      const Complex v = sampler.next();
      mean += v;
      second += std::norm(v);
      fourth += std::norm(v) * std::norm(v);
    }
    mean /= count;
    second /= count;
    fourth /= count;
    const double sqrt_n = std::sqrt(static_cast<double>(count));
    INFO("kind ", rng::to_string(kind));
    CHECK(std::abs(mean) < 5.0 / sqrt_n);
    CHECK(std::abs(second - 1.0) <
          5.0 * std::sqrt(rng::fourth_abs_moment(kind) - 1.0 + 1e-12) / sqrt_n);
    CHECK(fourth == doctest::Approx(rng::fourth_abs_moment(kind)).epsilon(0.05));
  }
}

TEST_CASE("noise sampling is a pure function of the seed") {
  const BandMatrix a = sample(small_shape, rng::NoiseKind::ComplexGaussian, 42);
  const BandMatrix b = sample(small_shape, rng::NoiseKind::ComplexGaussian, 42);
  CHECK(a.entries == b.entries);
  const BandMatrix c = sample(small_shape, rng::NoiseKind::ComplexGaussian, 43);
  CHECK(a.entries != c.entries);
}

TEST_CASE("noise lands exactly on the band support") {
  for (const BandShape& shape :
       {BandShape::make(40, 7, true), BandShape::make(37, 5, false), BandShape::make(9, 4, true)}) {
    for (auto kind : {rng::NoiseKind::ComplexGaussian, rng::NoiseKind::Rademacher}) {
      const BandMatrix x = sample(shape, kind, 7);
      CHECK(validate(x).empty());
      for (int j = 0; j < shape.n; ++j)
        for (int i = 0; i < shape.n; ++i) {
          if (shape.allows(i, j))
            CHECK(x.entries(i, j) != Complex(0));  // continuous / unit-modulus draws
          else
            CHECK(x.entries(i, j) == Complex(0));
        }
    }
  }
}

TEST_CASE("real storage rejects complex distributions") {
  CHECK_THROWS_AS(sample_noise<double>(EnsembleConfig::make(
                      small_shape, 1.0, rng::NoiseKind::ComplexGaussian, 0)),
                  std::invalid_argument);
  const RealBandMatrix x =
      sample_noise<double>(EnsembleConfig::make(small_shape, 1.0, rng::NoiseKind::Rademacher, 0));
  CHECK(validate(x).empty());
}

TEST_CASE("sampled entries pass the CLT-width bands at n=2000, b=50") {
  const BandShape shape = BandShape::make(2000, 50, true);
  const BandMatrix x = sample(shape, rng::NoiseKind::ComplexGaussian, 2024);
  const double entries = static_cast<double>(shape.n) * shape.row_budget();

  Complex mean = 0.0;
  double second = 0.0;
  for (int j = 0; j < shape.n; ++j)
    for (int i = 0; i < shape.n; ++i)
      if (shape.allows(i, j)) {
        mean += x.entries(i, j);
        second += std::norm(x.entries(i, j));
      }
  mean /= entries;
  second /= entries;

  const double width = 3.0 / std::sqrt(entries);
  CHECK(std::abs(mean) < width);
  CHECK(std::abs(second - 1.0) <
        width * std::sqrt(rng::fourth_abs_moment(rng::NoiseKind::ComplexGaussian) - 1.0));
}

TEST_CASE("diagonal realization of a target measure") {
  const BandShape shape = BandShape::make(4, 1, true);
  const double c = shape.row_budget();

  SUBCASE("single atom at 1 gives sqrt(c) I") {
    const BandMatrix r = deterministic_from_measure(SpectralMeasure::point_mass(1.0), shape);
    CHECK((r.entries - std::sqrt(c) * ComplexMatrix::Identity(4, 4)).norm() == 0.0);
    const EsdSample esd = eigenvalues_hermitian(ComplexMatrix(gram(r.entries) / c));
    for (int i = 0; i < 4; ++i) CHECK(esd.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("atom at 0 gives the zero matrix") {
    const BandMatrix r = deterministic_from_measure(SpectralMeasure::point_mass(0.0), shape);
    CHECK(r.entries.norm() == 0.0);
  }

  SUBCASE("two atoms quantize with the expected diagonal") {
    const auto measure = SpectralMeasure::from_atoms({{1.0, 0.5}, {4.0, 0.5}});
    const BandMatrix r = deterministic_from_measure(measure, shape);
    const RealVector diag = r.entries.diagonal().real();
    CHECK(diag(0) == doctest::Approx(std::sqrt(c * 1.0)));
    CHECK(diag(1) == doctest::Approx(std::sqrt(c * 1.0)));
    CHECK(diag(2) == doctest::Approx(std::sqrt(c * 4.0)));
    CHECK(diag(3) == doctest::Approx(std::sqrt(c * 4.0)));
  }

  SUBCASE("weights that are multiples of 1/n quantize exactly") {
    // atom locations chosen so sqrt(c t)^2 / c round-trips without error
    const auto measure = SpectralMeasure::from_atoms({{3.0, 0.5}, {12.0, 0.5}});
    const BandMatrix r = deterministic_from_measure(measure, shape);
    const EsdSample esd = eigenvalues_hermitian(ComplexMatrix(gram(r.entries) / c));
    CHECK(kolmogorov_distance(esd, [&](double t) { return measure.cdf(t); }) == 0.0);
  }

  SUBCASE("general weights quantize within 1/n in Kolmogorov distance") {
    const auto measure = SpectralMeasure::from_atoms({{1.8, 1.0 / 3.0}, {5.0, 2.0 / 3.0}});
    const BandShape shape10 = BandShape::make(10, 2, true);
    const BandMatrix r = deterministic_from_measure(measure, shape10);
    int low = 0;
    for (int i = 0; i < 10; ++i)
      if (std::abs(r.entries(i, i).real() - 3.0) < 1e-12) ++low;  // sqrt(5 * 1.8)
    CHECK(low == 3);  // quantiles (i-1/2)/10 <= 1/3 for i = 1..3
    // KS bound of the quantile rule itself, on exact atom locations (the
    // eigensolver may shift an atom by an ulp, which the exact sup-CDF
    // distance would count as the full atom weight)
    RealVector quantized(10);
    for (int i = 0; i < 10; ++i) quantized(i) = measure.quantile((i + 0.5) / 10.0);
    std::sort(quantized.data(), quantized.data() + 10);
    CHECK(kolmogorov_distance(EsdSample{quantized},
                              [&](double t) { return measure.cdf(t); }) <= 0.1 + 1e-12);
  }

  SUBCASE("negative atom location is rejected upstream") {
    CHECK_THROWS_AS(SpectralMeasure::from_atoms({{-1.0, 1.0}}), std::invalid_argument);
  }
}

TEST_CASE("singular-value truncation") {
  const BandShape shape = BandShape::make(4, 1, true);
  const double c = shape.row_budget();
  const auto measure = SpectralMeasure::from_atoms({{1.0, 0.5}, {4.0, 0.5}});
  const BandMatrix r = deterministic_from_measure(measure, shape);

  SUBCASE("no-op when alpha clears every singular value") {
    const BandMatrix out = truncate_singular_values(r, 2.5);
    CHECK((out.entries - r.entries).norm() < 1e-10 * r.entries.norm());
    CHECK(truncated_count(r, 2.5) == 0);
  }

  SUBCASE("alpha between the atoms zeroes exactly half the spectrum") {
    const BandMatrix out = truncate_singular_values(r, 1.5);
    CHECK(truncated_count(r, 1.5) == 2);
    ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
    expected(0, 0) = std::sqrt(c);
    expected(1, 1) = std::sqrt(c);
    CHECK((out.entries - expected).norm() < 1e-10 * std::sqrt(c));
  }

  SUBCASE("zero matrix stays zero") {
    const BandMatrix zero = BandMatrix::zero(shape);
    CHECK(truncate_singular_values(zero, 1.0).entries.norm() == 0.0);
  }

  SUBCASE("alpha must be positive") {
    CHECK_THROWS_AS(truncate_singular_values(r, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(truncate_singular_values(r, -1.0), std::invalid_argument);
  }

  SUBCASE("truncated count equals the scaled-spectrum tail count") {
    const EsdSample esd = eigenvalues_hermitian(ComplexMatrix(gram(r.entries) / c));
    for (double alpha : {0.5, 1.5, 2.5}) {
      const double tail = esd.tail_fraction(alpha * alpha);
      CHECK(truncated_count(r, alpha) == static_cast<int>(std::lround(tail * shape.n)));
    }
  }
}

TEST_CASE("model assembly") {
  SUBCASE("zero signal reduces to scaled noise") {
    const BandMatrix x = sample(small_shape, rng::NoiseKind::ComplexGaussian, 5);
    const BandMatrix y = assemble_signal_plus_noise(BandMatrix::zero(small_shape), x, 1.0);
    const double scale = std::sqrt(static_cast<double>(small_shape.row_budget()));
    CHECK((y.entries - x.entries / scale).norm() == 0.0);
  }

  SUBCASE("zero noise reduces to the scaled signal") {
    const BandMatrix r = deterministic_from_measure(SpectralMeasure::point_mass(2.0), small_shape);
    const BandMatrix y = assemble_signal_plus_noise(r, BandMatrix::zero(small_shape), 3.0);
    const double scale = std::sqrt(static_cast<double>(small_shape.row_budget()));
    CHECK((y.entries - r.entries / scale).norm() == 0.0);
  }

  SUBCASE("worked 2x2 diagonal example") {
    const BandShape shape = BandShape::make(2, 0, false);  // row budget 1
    BandMatrix r = BandMatrix::zero(shape);
    r.entries(0, 0) = 1.0;
    BandMatrix x = BandMatrix::zero(shape);
    x.entries(0, 0) = 1.0;
    x.entries(1, 1) = -1.0;
    const BandMatrix y = assemble_signal_plus_noise(r, x, 2.0);
    CHECK(y.entries(0, 0) == Complex(3.0));
    CHECK(y.entries(1, 1) == Complex(-2.0));
  }

  SUBCASE("shape mismatch is rejected") {
    const BandMatrix a = BandMatrix::zero(small_shape);
    const BandMatrix b = BandMatrix::zero(BandShape::make(8, 1, true));
    CHECK_THROWS_AS(assemble_signal_plus_noise(a, b, 1.0), std::invalid_argument);
  }

  SUBCASE("assembly is linear in both arguments") {
    const BandMatrix r1 = sample(small_shape, rng::NoiseKind::ComplexGaussian, 11);
    const BandMatrix r2 = sample(small_shape, rng::NoiseKind::ComplexGaussian, 12);
    const BandMatrix x1 = sample(small_shape, rng::NoiseKind::ComplexGaussian, 13);
    const BandMatrix x2 = sample(small_shape, rng::NoiseKind::ComplexGaussian, 14);
    const double sigma = 1.7;
    const ComplexMatrix lhs = assemble_signal_plus_noise(r1, x1, sigma).entries +
                              assemble_signal_plus_noise(r2, x2, sigma).entries;
    const BandMatrix sum_r{small_shape, r1.entries + r2.entries};
    const BandMatrix sum_x{small_shape, x1.entries + x2.entries};
    const ComplexMatrix rhs = assemble_signal_plus_noise(sum_r, sum_x, sigma).entries;
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
}
