#include "bandlab/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "bandlab/ensemble.hpp"
#include "bandlab/parallel.hpp"
#include "bandlab/resolvent.hpp"

namespace bandlab::verify {

namespace {

// Run f<double> or f<Complex> depending on where the entry distribution lives.
template <typename F>
auto dispatch_scalar(rng::NoiseKind kind, F&& f) {
  if (rng::is_complex_kind(kind)) return f.template operator()<Complex>();
  return f.template operator()<double>();
}

bool is_zero_measure(const SpectralMeasure& measure) {
  return measure.atoms.size() == 1 && measure.atoms.front().location == 0.0;
}

// Probe vector with iid entries on the support of the given 1-based column.
template <typename Scalar>
DenseVector<Scalar> sample_column_vector(const BandShape& shape, int column, rng::NoiseKind kind,
                                         std::uint64_t seed) {
  rng::NoiseSampler sampler(kind, seed);
  DenseVector<Scalar> x = DenseVector<Scalar>::Zero(shape.n);
  for (int i = 0; i < shape.n; ++i)
    if (shape.allows(i, column - 1)) {
      if constexpr (std::is_same_v<Scalar, double>)
        x(i) = sampler.next_real();
      else
        x(i) = sampler.next();
    }
  return x;
}

template <typename Scalar>
BandMatrixT<Scalar> build_deterministic(const std::optional<SpectralMeasure>& measure,
                                        const BandShape& shape) {
  if (!measure || is_zero_measure(*measure)) return BandMatrixT<Scalar>::zero(shape);
  return deterministic_from_measure<Scalar>(*measure, shape);
}

// Least-squares slope of y against x with its standard error.
std::pair<double, double> ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - my - slope * (x[i] - mx);
    rss += r * r;
  }
  const double se = k > 2 ? std::sqrt(rss / (static_cast<double>(k) - 2.0) / sxx) : 0.0;
  return {slope, se};
}

}  // namespace

TrialStats summarize(const std::vector<double>& values) {
  TrialStats stats;
  stats.trials = static_cast<int>(values.size());
  if (values.empty()) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.se = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0) /
                         static_cast<double>(values.size()));
  }
  return stats;
}

double deterministic_equivalent_gap(const EsdSample& gram_esd, const RealVector& signal_spectrum,
                                    double sigma, HalfPlanePoint z) {
  if (gram_esd.size() != signal_spectrum.size())
    throw std::invalid_argument("deterministic_equivalent_gap: spectrum sizes differ");
  const Complex m = empirical_stieltjes(gram_esd, z);
  const Complex shift = 1.0 + sigma * sigma * m;
  Complex trace = 0.0;
  for (Eigen::Index i = 0; i < signal_spectrum.size(); ++i) {
    const Complex den = signal_spectrum(i) / shift - shift * z.value();
    if (std::abs(den) < 1e-14)
      throw ComputationError("deterministic_equivalent_gap: equivalent matrix is singular");
    trace += 1.0 / den;
  }
  return std::abs(trace / static_cast<double>(signal_spectrum.size()) - m);
}

SweepReport convergence_sweep(const SweepSettings& settings, const std::vector<int>& sizes,
                              const std::function<int(int)>& bandwidth_rule,
                              const std::string& rule_label, int trials,
                              const std::vector<HalfPlanePoint>& grid) {
  if (sizes.empty()) throw std::invalid_argument("convergence_sweep: no sizes");
  if (trials < 1) throw std::invalid_argument("convergence_sweep: trials must be >= 1");
  if (grid.empty()) throw std::invalid_argument("convergence_sweep: empty grid");

  SweepReport report;
  report.rule_label = rule_label;
  report.seed = settings.seed;
  report.trials = trials;
  for (const auto& p : grid) report.grid.push_back(p.value());

  const LimitSolution limit =
      solve_grid(grid, settings.measure, settings.sigma, settings.solver, settings.threads);

  // Limit CDF for the pooled Kolmogorov distance: invert on a wide horizontal
  // grid just above the real axis. 1e-9 residuals are plenty for a CDF.
  const double edge =
      std::pow(std::sqrt(settings.measure.max_location()) + 2.0 * settings.sigma, 2);
  SolveOptions density_options = settings.solver;
  density_options.tol = std::max(density_options.tol, 1e-9);
  const LimitSolution density_solution =
      solve_grid(horizontal_grid(-0.5, 1.2 * edge + 0.5, 2001, 1e-3), settings.measure,
                 settings.sigma, density_options, settings.threads);
  const LimitCdf limit_cdf{invert_to_density(density_solution)};

  const HalfPlanePoint z_det{settings.det_gap_z};

  for (std::size_t size_index = 0; size_index < sizes.size(); ++size_index) {
    const int n = sizes[size_index];
    const BandShape shape = BandShape::make(n, bandwidth_rule(n), settings.periodic);

    RealVector signal = RealVector::Zero(n);
    if (!is_zero_measure(settings.measure))
      for (int i = 0; i < n; ++i)
        signal(i) = settings.measure.quantile((i + 0.5) / static_cast<double>(n));

    std::vector<double> sup_gaps(trials), det_gaps(trials);
    std::vector<RealVector> spectra(trials);

    parallel_for(trials, settings.threads, [&](int trial) {
      const std::uint64_t stream = rng::derive_stream(
          settings.seed, (static_cast<std::uint64_t>(size_index) << 32) |
                             static_cast<std::uint64_t>(trial));
      const EsdSample esd = dispatch_scalar(settings.dist, [&]<typename Scalar>() {
        const auto noise = sample_noise<Scalar>(
            EnsembleConfig::make(shape, settings.sigma, settings.dist, stream));
        const auto deterministic = build_deterministic<Scalar>(settings.measure, shape);
        return gram_spectrum(assemble_signal_plus_noise(deterministic, noise, settings.sigma));
      });
      double sup = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        sup = std::max(sup, std::abs(empirical_stieltjes(esd, grid[k]) - limit.values[k]));
      sup_gaps[trial] = sup;
      det_gaps[trial] = deterministic_equivalent_gap(esd, signal, settings.sigma, z_det);
      spectra[trial] = esd.eigenvalues;
    });

    RealVector pooled(static_cast<Eigen::Index>(trials) * n);
    for (int t = 0; t < trials; ++t) pooled.segment(static_cast<Eigen::Index>(t) * n, n) = spectra[t];
    std::sort(pooled.data(), pooled.data() + pooled.size());

    SweepPoint point;
    point.n = n;
    point.bandwidth = shape.bandwidth;
    point.row_budget = shape.row_budget();
    point.sup_gap = summarize(sup_gaps);
    point.det_gap = summarize(det_gaps);
    point.ks_pooled = kolmogorov_distance(EsdSample{std::move(pooled)}, limit_cdf);
    report.points.push_back(std::move(point));
  }
  return report;
}

namespace {

template <typename Scalar>
double quad_form_sample(QuadFormKernel kernel, const BandShape& shape,
                        const QuadFormSettings& settings, int moment_order, std::uint64_t seed) {
  const int n = shape.n;
  const double c = static_cast<double>(shape.row_budget());

  if (kernel == QuadFormKernel::Zero) return 0.0;

  const auto probe = sample_column_vector<Scalar>(shape, settings.column, settings.dist,
                                                  rng::derive_stream(seed, 1));
  Complex q;
  if (kernel == QuadFormKernel::Identity) {
    q = probe.squaredNorm() - c;
  } else {
    // Kernel from an independent resample, with the probed column removed.
    const auto noise = sample_noise<Scalar>(
        EnsembleConfig::make(shape, settings.sigma, settings.dist, rng::derive_stream(seed, 0)));
    const auto deterministic = build_deterministic<Scalar>(settings.measure, shape);
    auto y = assemble_signal_plus_noise(deterministic, noise, settings.sigma);
    y.entries.col(settings.column - 1).setZero();
    const HermitianResolvent<Scalar> resolvent(gram(y.entries));
    const Complex z = settings.z;

    if (kernel == QuadFormKernel::LeaveOneOutResolvent) {
      q = resolvent.quadratic_form(probe, z) -
          (c / static_cast<double>(n)) * resolvent.trace_resolvent(z);
    } else {
      // M = C_j^{-1} B_j^{-1}; B_j is diagonal for the diagonal deterministic
      // part this artifact constructs.
      const Complex m_j = resolvent.trace_resolvent(z) / static_cast<double>(n);
      const Complex shift = 1.0 + settings.sigma * settings.sigma * m_j;
      if (std::abs(shift) < 1e-14)
        throw ComputationError("quadratic_form: 1 + sigma^2 m vanished");
      ComplexVector equivalent_diag(n);
      for (int i = 0; i < n; ++i) {
        const double t = std::norm(Complex(deterministic.entries(i, i))) / c;
        equivalent_diag(i) = t / shift - shift * z;
        if (std::abs(equivalent_diag(i)) < 1e-14)
          throw ComputationError("quadratic_form: equivalent matrix is singular");
      }
      ComplexVector scaled = probe.template cast<Complex>();
      for (int i = 0; i < n; ++i) scaled(i) /= equivalent_diag(i);
      const Complex form = resolvent.bilinear_form_mixed(probe, scaled, z);

      std::vector<int> all(n);
      for (int i = 0; i < n; ++i) all[i] = i;
      const std::vector<Complex> diag = resolvent.resolvent_diagonal(all, z);
      Complex trace = 0.0;
      for (int i = 0; i < n; ++i) trace += diag[i] / equivalent_diag(i);
      q = form - (c / static_cast<double>(n)) * trace;
    }
  }
  return std::pow(std::abs(q), 2.0 * moment_order);
}

}  // namespace

TrialStats quadratic_form_statistic(QuadFormKernel kernel, const BandShape& shape,
                                    const QuadFormSettings& settings, int moment_order,
                                    int trials, std::uint64_t seed) {
  if (moment_order < 1) throw std::invalid_argument("quadratic_form: moment_order must be >= 1");
  if (trials < 1) throw std::invalid_argument("quadratic_form: trials must be >= 1");
  std::vector<double> samples(trials);
  parallel_for(trials, settings.threads, [&](int trial) {
    samples[trial] = dispatch_scalar(settings.dist, [&]<typename Scalar>() {
      return quad_form_sample<Scalar>(kernel, shape, settings, moment_order,
                                      rng::derive_stream(seed, trial));
    });
  });
  return summarize(samples);
}

QuadFormScaling quadratic_form_scaling(QuadFormKernel kernel, const std::vector<int>& sizes,
                                       const std::function<int(int)>& bandwidth_rule,
                                       const QuadFormSettings& settings, int moment_order,
                                       int trials, std::uint64_t seed) {
  QuadFormScaling out;
  out.moment_order = moment_order;
  out.trials = trials;
  out.seed = seed;
  std::vector<double> log_n, log_c, log_stat;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const BandShape shape = BandShape::make(sizes[i], bandwidth_rule(sizes[i]), settings.periodic);
    const TrialStats stats = quadratic_form_statistic(
        kernel, shape, settings, moment_order, trials,
        rng::derive_stream(seed, static_cast<std::uint64_t>(i) + 1));
    out.points.push_back({shape.n, shape.bandwidth, shape.row_budget(), stats.mean, stats.se});
    log_n.push_back(std::log(static_cast<double>(shape.n)));
    log_c.push_back(std::log(static_cast<double>(shape.row_budget())));
    log_stat.push_back(std::log(stats.mean));
  }
  std::tie(out.slope_vs_n, out.slope_vs_n_se) = ols_slope(log_n, log_stat);
  std::tie(out.slope_vs_row_budget, out.slope_vs_row_budget_se) = ols_slope(log_c, log_stat);
  return out;
}

NormTailReport norm_tail_experiment(const BandShape& shape, int trials,
                                    std::vector<double> thresholds, std::uint64_t seed,
                                    int threads) {
  if (trials < 1) throw std::invalid_argument("norm_tail_experiment: trials must be >= 1");
  const double c = static_cast<double>(shape.row_budget());
  const double log_n = std::log(static_cast<double>(shape.n));

  std::vector<double> scaled(trials);
  parallel_for(trials, threads, [&](int trial) {
    const std::uint64_t stream = rng::derive_stream(seed, trial);
    const auto noise = sample_noise<double>(
        EnsembleConfig::make(shape, 1.0, rng::NoiseKind::RealGaussian, rng::derive_stream(stream, 0)));
    scaled[trial] = gram_operator_norm(noise, rng::derive_stream(stream, 1)) / c;
  });

  NormTailReport report;
  report.thresholds = std::move(thresholds);
  report.trials = trials;
  report.seed = seed;
  report.mean_scaled_norm = summarize(scaled).mean;
  for (double t : report.thresholds) {
    int count = 0;
    for (double v : scaled)
      if (v > t + log_n) ++count;
    report.frequencies.push_back(static_cast<double>(count) / static_cast<double>(trials));
    report.bounds.push_back(std::exp(std::exp(1.0) - t));
  }
  return report;
}

RankPerturbationResult rank_perturbation_check(int trials, int n, int rank, std::uint64_t seed) {
  if (n < 1 || n > 50)
    throw std::invalid_argument("rank_perturbation_check: n must be in [1, 50] (exact eigensolves)");
  if (rank < 0 || rank > n)
    throw std::invalid_argument("rank_perturbation_check: rank must be in [0, n]");

  RankPerturbationResult result;
  result.bound = 2.0 * static_cast<double>(rank) / static_cast<double>(n);
  for (int trial = 0; trial < trials; ++trial) {
    rng::NoiseSampler sampler(rng::NoiseKind::ComplexGaussian, rng::derive_stream(seed, trial));
    ComplexMatrix base(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) base(i, j) = sampler.next();
    ComplexMatrix perturbed = base;
    for (int r = 0; r < rank; ++r) {
      ComplexVector u(n), v(n);
      for (int i = 0; i < n; ++i) u(i) = sampler.next();
      for (int i = 0; i < n; ++i) v(i) = sampler.next();
      perturbed += u * v.adjoint();
    }
    const double distance = ecdf_sup_distance(eigenvalues_hermitian(gram(base)),
                                              eigenvalues_hermitian(gram(perturbed)));
    result.max_distance = std::max(result.max_distance, distance);
    if (distance > result.bound + 1e-10) {
      ++result.violations;
      result.ok = false;
      if (!result.counterexample) result.counterexample = {base, perturbed};
    }
  }
  return result;
}

TruncationCheckResult truncation_bound_check(const SpectralMeasure& measure,
                                             const BandShape& shape, double alpha, double sigma,
                                             rng::NoiseKind dist, std::uint64_t seed) {
  const BandMatrix deterministic = deterministic_from_measure(measure, shape);
  const BandMatrix noise = sample_noise(EnsembleConfig::make(shape, sigma, dist, seed));

  const BandMatrix y = assemble_signal_plus_noise(deterministic, noise, sigma);
  const BandMatrix truncated = truncate_singular_values(deterministic, alpha);
  const BandMatrix y_alpha = assemble_signal_plus_noise(truncated, noise, sigma);

  TruncationCheckResult result;
  result.truncated_count = truncated_count(deterministic, alpha);
  result.bound = 2.0 * static_cast<double>(result.truncated_count) / static_cast<double>(shape.n);
  result.distance = ecdf_sup_distance(gram_spectrum(y), gram_spectrum(y_alpha));
  result.ok = result.distance <= result.bound + 1e-10;
  if (!result.ok) result.counterexample = {deterministic, noise};
  return result;
}

PartialTraceTailReport partial_trace_tail_experiment(const BandShape& shape, HalfPlanePoint z,
                                                     int trials, std::vector<double> thresholds,
                                                     rng::NoiseKind dist, std::uint64_t seed,
                                                     int threads, int holdout_factor,
                                                     int column) {
  if (trials < 1) throw std::invalid_argument("partial_trace_tail: trials must be >= 1");
  if (holdout_factor < 10)
    throw std::invalid_argument("partial_trace_tail: holdout factor must be >= 10");
  if (dist == rng::NoiseKind::ScaledUniform)
    throw std::invalid_argument("partial_trace_tail: needs Gaussian or Rademacher entries");

  const int holdout = holdout_factor * trials;
  const int total = holdout + trials;
  const double scale = std::sqrt(static_cast<double>(shape.row_budget()));
  const IndexSet index_set = row_index_set(shape, column);
  std::vector<int> indices;
  for (int k : index_set) indices.push_back(k - 1);

  std::vector<Complex> values(total);
  parallel_for(total, threads, [&](int sample) {
    values[sample] = dispatch_scalar(dist, [&]<typename Scalar>() {
      auto noise = sample_noise<Scalar>(
          EnsembleConfig::make(shape, 1.0, dist, rng::derive_stream(seed, sample)));
      noise.entries /= Scalar(scale);
      noise.entries.col(column - 1).setZero();
      const HermitianResolvent<Scalar> resolvent(gram(noise.entries));
      Complex acc = 0.0;
      for (Complex d : resolvent.resolvent_diagonal(indices, z.value())) acc += d;
      return acc;
    });
  });

  Complex expectation = 0.0;
  for (int s = 0; s < holdout; ++s) expectation += values[s];
  expectation /= static_cast<double>(holdout);

  PartialTraceTailReport report;
  report.thresholds = std::move(thresholds);
  report.trials = trials;
  report.holdout = holdout;
  report.column = column;
  report.seed = seed;
  report.expectation = expectation;
  const double rate = z.imag() * z.imag() / (32.0 * static_cast<double>(shape.n));
  for (double t : report.thresholds) {
    int count = 0;
    for (int s = holdout; s < total; ++s)
      if (std::abs(values[s] - expectation) > t) ++count;
    const double p = static_cast<double>(count) / static_cast<double>(trials);
    report.frequencies.push_back(p);
    report.bounds.push_back(2.0 * std::exp(-rate * t * t));
    report.stderrs.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(trials)));
  }
  return report;
}

double sherman_morrison_max_error(int trials, int n, std::uint64_t seed) {
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    rng::NoiseSampler sampler(rng::NoiseKind::ComplexGaussian, rng::derive_stream(seed, trial));
    ComplexMatrix a(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = sampler.next();
    const ComplexMatrix hermitian = a + a.adjoint() + 3.0 * ComplexMatrix::Identity(n, n);
    ComplexVector v(n);
    for (int i = 0; i < n; ++i) v(i) = sampler.next();

    const ComplexMatrix inv = hermitian.inverse();
    const ComplexMatrix direct = (hermitian + v * v.adjoint()).inverse();
    const Complex denom = 1.0 + (v.adjoint() * inv * v)(0, 0);
    const ComplexMatrix formula = inv - (inv * v) * (v.adjoint() * inv) / denom;
    worst = std::max(worst, (direct - formula).norm() / direct.norm());
  }
  return worst;
}

}  // namespace bandlab::verify
