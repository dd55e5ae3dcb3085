// Monte Carlo and exact-oracle experiments probing the model's limit-law,
// concentration and perturbation behaviour at desk scale. Every report is a
// deterministic function of (settings, master seed, trial count): trials draw
// per-index seed streams and aggregate in index order.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bandlab/band.hpp"
#include "bandlab/limit_law.hpp"
#include "bandlab/rng.hpp"
#include "bandlab/spectra.hpp"
#include "bandlab/spectral_measure.hpp"

namespace bandlab::verify {

struct TrialStats {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  int trials = 0;
};

TrialStats summarize(const std::vector<double>& values);

// |tr B^{-1}/n - m_n| where B is the deterministic equivalent built from the
// spectrum of the scaled signal Gram matrix and m_n is read off the sample.
// `signal_spectrum` holds the n eigenvalues of (1/c) R R^*.
double deterministic_equivalent_gap(const EsdSample& gram_esd, const RealVector& signal_spectrum,
                                    double sigma, HalfPlanePoint z);

template <typename Scalar>
double deterministic_equivalent_gap(const BandMatrixT<Scalar>& y, const BandMatrixT<Scalar>& r,
                                    double sigma, HalfPlanePoint z) {
  const double c = static_cast<double>(r.shape.row_budget());
  EsdSample signal = eigenvalues_hermitian(DenseMatrix<Scalar>(gram(r.entries) / c));
  return deterministic_equivalent_gap(gram_spectrum(y), signal.eigenvalues, sigma, z);
}

// ---------------------------------------------------------------------------
// Convergence sweep over sizes

struct SweepSettings {
  SpectralMeasure measure = SpectralMeasure::point_mass(0.0);
  double sigma = 1.0;
  rng::NoiseKind dist = rng::NoiseKind::RealGaussian;
  bool periodic = true;
  std::uint64_t seed = 1;
  int threads = 1;
  Complex det_gap_z = Complex(0.0, 1.0);
  SolveOptions solver{};
};

struct SweepPoint {
  int n = 0, bandwidth = 0, row_budget = 0;
  TrialStats sup_gap;   // sup over the grid of |m_n(z) - m(z)|
  TrialStats det_gap;   // |tr B^{-1}/n - m_n| at det_gap_z
  double ks_pooled = 0.0;  // Kolmogorov distance, pooled spectrum vs inverted limit law
};

struct SweepReport {
  std::string rule_label;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<Complex> grid;
  std::vector<SweepPoint> points;
};

SweepReport convergence_sweep(const SweepSettings& settings, const std::vector<int>& sizes,
                              const std::function<int(int)>& bandwidth_rule,
                              const std::string& rule_label, int trials,
                              const std::vector<HalfPlanePoint>& grid);

// ---------------------------------------------------------------------------
// Quadratic-form concentration scaling

// Kernel M of the statistic |x^* M x - (c/n) tr M|^{2l}; the resolvent kernels
// are built at z from an independent resample, with the probed column removed
// outright.
enum class QuadFormKernel { Zero, Identity, LeaveOneOutResolvent, ResolventEquivalentProduct };

struct QuadFormSettings {
  rng::NoiseKind dist = rng::NoiseKind::RealGaussian;
  bool periodic = true;
  double sigma = 1.0;
  std::optional<SpectralMeasure> measure;  // empty => R = 0
  Complex z = Complex(0.0, 1.0);
  int column = 1;  // 1-based probe column
  int threads = 1;
};

struct QuadFormPoint {
  int n = 0, bandwidth = 0, row_budget = 0;
  double statistic = 0.0;
  double se = 0.0;
};

struct QuadFormScaling {
  std::vector<QuadFormPoint> points;
  double slope_vs_n = 0.0, slope_vs_n_se = 0.0;
  double slope_vs_row_budget = 0.0, slope_vs_row_budget_se = 0.0;
  int moment_order = 1, trials = 0;
  std::uint64_t seed = 0;
};

TrialStats quadratic_form_statistic(QuadFormKernel kernel, const BandShape& shape,
                                    const QuadFormSettings& settings, int moment_order,
                                    int trials, std::uint64_t seed);

QuadFormScaling quadratic_form_scaling(QuadFormKernel kernel, const std::vector<int>& sizes,
                                       const std::function<int(int)>& bandwidth_rule,
                                       const QuadFormSettings& settings, int moment_order,
                                       int trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Norm of the noise Gram matrix (standard Gaussian entries)

struct NormTailReport {
  std::vector<double> thresholds;   // t values
  std::vector<double> frequencies;  // P(||XX^*||/c > t + log n), empirical
  std::vector<double> bounds;       // e^e e^{-t}
  double mean_scaled_norm = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

NormTailReport norm_tail_experiment(const BandShape& shape, int trials,
                                    std::vector<double> thresholds, std::uint64_t seed,
                                    int threads);

// ---------------------------------------------------------------------------
// Rank-perturbation bound on Gram spectra

struct RankPerturbationResult {
  bool ok = true;
  int violations = 0;
  double max_distance = 0.0;
  double bound = 0.0;  // 2k/n
  std::optional<std::pair<ComplexMatrix, ComplexMatrix>> counterexample;  // (P, Q)
};

// Exact check at n <= 50: sup-CDF distance of the spectra of P P^* and Q Q^*
// with Q = P + (rank-k) stays within 2k/n + 1e-10.
RankPerturbationResult rank_perturbation_check(int trials, int n, int rank, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Singular-value truncation bound

struct TruncationCheckResult {
  bool ok = true;
  double distance = 0.0;
  double bound = 0.0;  // (2/n) * #truncated
  int truncated_count = 0;
  std::optional<std::pair<BandMatrix, BandMatrix>> counterexample;  // (R, X)
};

TruncationCheckResult truncation_bound_check(const SpectralMeasure& measure,
                                             const BandShape& shape, double alpha, double sigma,
                                             rng::NoiseKind dist, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Partial-trace tail (Azuma-type bound)

struct PartialTraceTailReport {
  std::vector<double> thresholds;
  std::vector<double> frequencies;
  std::vector<double> bounds;  // 2 exp(-Im(z)^2 t^2 / (32 n))
  std::vector<double> stderrs;
  Complex expectation = 0.0;  // holdout estimate of E sum_{k in I_j} ((C_j - z)^{-1})_{kk}
  int trials = 0, holdout = 0, column = 1;
  std::uint64_t seed = 0;
};

PartialTraceTailReport partial_trace_tail_experiment(const BandShape& shape, HalfPlanePoint z,
                                                     int trials, std::vector<double> thresholds,
                                                     rng::NoiseKind dist, std::uint64_t seed,
                                                     int threads, int holdout_factor = 10,
                                                     int column = 1);

// ---------------------------------------------------------------------------
// Resolvent-identity plumbing guard

// Max relative error between (P + v v^*)^{-1} computed directly and via the
// rank-one update formula, over random Hermitian instances.
double sherman_morrison_max_error(int trials, int n, std::uint64_t seed);

}  // namespace bandlab::verify
