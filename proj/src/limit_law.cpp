#include "bandlab/limit_law.hpp"

#include <algorithm>
#include <optional>
#include <cmath>

#include "bandlab/parallel.hpp"

namespace bandlab {

Complex master_rhs(Complex m, HalfPlanePoint z, const SpectralMeasure& measure, double sigma) {
  const double s2 = sigma * sigma;
  const Complex shift = 1.0 + s2 * m;  // |1 + sigma^2 m| >= Im z / |z| on the solution branch
  if (std::abs(shift) < 1e-14)
    throw SingularityError("master_rhs: 1 + sigma^2 m vanished");
  Complex acc = 0.0;
  for (const auto& atom : measure.atoms) {
    const Complex den = atom.location / shift - shift * z.value();
    if (std::abs(den) < 1e-14)
      throw SingularityError("master_rhs: atom denominator within 1e-14 of zero");
    acc += atom.weight / den;
  }
  return acc;
}

namespace {

Complex project_half_plane(Complex m, double floor) {
  if (m.imag() < floor) m.imag(floor);
  return m;
}

struct RhsEval {
  Complex rhs;
  Complex derivative;  // d rhs / d m
};

// Like master_rhs but with the derivative, and returning nothing instead of
// throwing when an atom denominator degenerates (candidate evaluation must
// survive abusive trial points).
std::optional<RhsEval> try_rhs(Complex m, Complex z, const SpectralMeasure& measure,
                               double sigma) {
  const double s2 = sigma * sigma;
  const Complex shift = 1.0 + s2 * m;
  if (std::abs(shift) < 1e-14) return std::nullopt;
  Complex rhs = 0.0;
  Complex derivative = 0.0;
  for (const auto& atom : measure.atoms) {
    const Complex den = atom.location / shift - shift * z;
    if (std::abs(den) < 1e-14) return std::nullopt;
    rhs += atom.weight / den;
    derivative += atom.weight * s2 * (atom.location / (shift * shift) + z) / (den * den);
  }
  return RhsEval{rhs, derivative};
}

}  // namespace

PointSolution solve_fixed_point_from(Complex start, HalfPlanePoint z,
                                     const SpectralMeasure& measure, double sigma,
                                     const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_fixed_point: tol must be > 0");
  const double floor = options.imag_floor * z.imag();

  Complex m = project_half_plane(start, floor);
  std::optional<RhsEval> eval = try_rhs(m, z.value(), measure, sigma);
  if (!eval) throw SingularityError("solve_fixed_point: start point degenerates the equation");
  double residual = std::abs(m - eval->rhs);
  double theta = 1.0;
  int it = 0;
  double window_residual = residual;

  // Inner step: damped iteration m <- (1-theta) m + theta rhs(m), theta
  // halving on residual increase. Two reinforcements, both recorded offline:
  // a Newton step on m - rhs(m) = 0 is tried first (the damped map stalls at
  // rate 1 - O(Im z) just inside a spectral edge, where its multiplier is
  // nearly 1 with almost no phase), and when 16 damped iterations fail to
  // halve the residual the theta ladder is re-probed by candidate residual
  // (pure halving cannot see the rotating regime).
  while (residual >= options.tol && it < options.max_iter) {
    ++it;

    const Complex newton_direction = 1.0 - eval->derivative;
    if (std::abs(newton_direction) > 1e-14) {
      const Complex candidate = m - (m - eval->rhs) / newton_direction;
      if (candidate.imag() > floor) {
        if (auto cand_eval = try_rhs(candidate, z.value(), measure, sigma)) {
          const double cand_residual = std::abs(candidate - cand_eval->rhs);
          if (cand_residual < residual) {
            m = candidate;
            eval = cand_eval;
            residual = cand_residual;
            continue;
          }
        }
      }
    }

    if (it % 16 == 0 && residual > 0.5 * window_residual) {
      for (double probe = 1.0; probe >= options.damping_floor * 0.75; probe /= 2.0) {
        const double th = std::max(probe, options.damping_floor);
        const Complex candidate = project_half_plane((1.0 - th) * m + th * eval->rhs, floor);
        const auto cand_eval = try_rhs(candidate, z.value(), measure, sigma);
        if (!cand_eval) continue;
        const double cand_residual = std::abs(candidate - cand_eval->rhs);
        if (cand_residual < residual) {
          m = candidate;
          eval = cand_eval;
          residual = cand_residual;
          theta = th;
        }
      }
      window_residual = residual;
      continue;
    }
    if (it % 16 == 0) window_residual = residual;

    const Complex candidate = project_half_plane((1.0 - theta) * m + theta * eval->rhs, floor);
    const auto cand_eval = try_rhs(candidate, z.value(), measure, sigma);
    if (!cand_eval) {
      if (theta > options.damping_floor) {
        theta = std::max(theta / 2.0, options.damping_floor);
        continue;
      }
      throw SingularityError("solve_fixed_point: iteration hit a degenerate denominator");
    }
    const double cand_residual = std::abs(candidate - cand_eval->rhs);
    if (cand_residual > residual && theta > options.damping_floor) {
      theta = std::max(theta / 2.0, options.damping_floor);
      continue;
    }
    m = candidate;
    eval = cand_eval;
    residual = cand_residual;
  }
  if (residual >= options.tol)
    throw NonConvergenceError("solve_fixed_point: residual " + std::to_string(residual) +
                                  " above tol after " + std::to_string(it) + " iterations",
                              m, residual, it);
  return {m, residual, it};
}

PointSolution solve_fixed_point(HalfPlanePoint z, const SpectralMeasure& measure, double sigma,
                                const SolveOptions& options) {
  const double eta_target = z.imag();

  // Continuation: walk Im z down geometrically from max(eta, start),
  // warm-starting each level with the previous solution.
  std::vector<double> levels;
  for (double eta = std::max(eta_target, options.continuation_start); eta > eta_target;
       eta *= options.continuation_ratio)
    levels.push_back(eta);
  levels.push_back(eta_target);

  const Complex z0(z.real(), levels.front());
  Complex m = -1.0 / z0;  // Stieltjes transform of delta_0; correct large-|z| behaviour
  int total_iterations = 0;
  PointSolution last{};
  for (double eta : levels) {
    const HalfPlanePoint zk(z.real(), eta);
    try {
      last = solve_fixed_point_from(m, zk, measure, sigma, options);
    } catch (NonConvergenceError& e) {
      e.iterations += total_iterations;
      throw;
    }
    m = last.m;
    total_iterations += last.iterations;
  }
  last.iterations = total_iterations;
  return last;
}

Complex mp_closed_form(HalfPlanePoint zp) {
  const Complex z = zp.value();
  const Complex disc = std::sqrt(z * z - 4.0 * z);
  const Complex r1 = (-z + disc) / (2.0 * z);
  const Complex r2 = (-z - disc) / (2.0 * z);
  if (r1.imag() > 0.0 && r2.imag() <= 0.0) return r1;
  if (r2.imag() > 0.0 && r1.imag() <= 0.0) return r2;
  // Degenerate tie: keep the branch matching the -1/z asymptote.
  const Complex asymptote = -1.0 / z;
  return std::abs(r1 - asymptote) <= std::abs(r2 - asymptote) ? r1 : r2;
}

std::vector<HalfPlanePoint> horizontal_grid(double x_min, double x_max, int count, double eta) {
  if (count < 1) throw std::invalid_argument("horizontal_grid: count must be >= 1");
  if (count > 1 && !(x_max > x_min))
    throw std::invalid_argument("horizontal_grid: x_max must exceed x_min");
  std::vector<HalfPlanePoint> grid;
  grid.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double x =
        count == 1 ? x_min : x_min + (x_max - x_min) * static_cast<double>(k) / (count - 1);
    grid.emplace_back(x, eta);
  }
  return grid;
}

LimitSolution solve_grid(const std::vector<HalfPlanePoint>& grid, const SpectralMeasure& measure,
                         double sigma, const SolveOptions& options, int threads) {
  LimitSolution out;
  const int count = static_cast<int>(grid.size());
  out.grid.resize(count);
  out.values.resize(count);
  out.residuals.resize(count);
  out.iterations.resize(count);
  parallel_for(count, threads, [&](int k) {
    const PointSolution p = solve_fixed_point(grid[k], measure, sigma, options);
    out.grid[k] = grid[k].value();
    out.values[k] = p.m;
    out.residuals[k] = p.residual;
    out.iterations[k] = p.iterations;
  });
  return out;
}

DensityCurve invert_to_density(const LimitSolution& solution) {
  if (solution.grid.empty()) throw std::invalid_argument("invert_to_density: empty solution");
  DensityCurve curve;
  curve.eta = solution.grid.front().imag();
  curve.x.reserve(solution.grid.size());
  curve.density.reserve(solution.grid.size());
  for (std::size_t k = 0; k < solution.grid.size(); ++k) {
    const double eta = solution.grid[k].imag();
    if (std::abs(eta - curve.eta) > 1e-12 * std::max(curve.eta, 1e-300))
      throw std::invalid_argument("invert_to_density: grid mixes different eta values");
    curve.x.push_back(solution.grid[k].real());
    curve.density.push_back(solution.values[k].imag() / M_PI);
  }
  return curve;
}

LimitCdf::LimitCdf(std::vector<double> density, double x0, double dx) : x0_(x0), dx_(dx) {
  if (density.size() < 2) throw std::invalid_argument("LimitCdf: need at least two samples");
  if (!(dx > 0.0)) throw std::invalid_argument("LimitCdf: grid spacing must be > 0");
  for (double d : density)
    if (d < 0.0) throw std::invalid_argument("LimitCdf: negative density sample");
  cumulative_.resize(density.size());
  cumulative_[0] = 0.0;
  for (std::size_t k = 1; k < density.size(); ++k)
    cumulative_[k] =
        std::min(1.0, cumulative_[k - 1] + 0.5 * dx * (density[k - 1] + density[k]));
}

LimitCdf::LimitCdf(const DensityCurve& curve)
    : LimitCdf(curve.density, curve.x.empty() ? 0.0 : curve.x.front(),
               curve.x.size() > 1 ? curve.x[1] - curve.x[0] : 0.0) {}

double LimitCdf::operator()(double x) const {
  const double last = cumulative_.back();
  if (x <= x0_) return 0.0;
  const double pos = (x - x0_) / dx_;
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= cumulative_.size()) return last;
  const double frac = pos - static_cast<double>(k);
  return cumulative_[k] + frac * (cumulative_[k + 1] - cumulative_[k]);
}

}  // namespace bandlab
