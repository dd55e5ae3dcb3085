// The limiting law: solve the self-consistent equation
//
//   m(z) = sum_k w_k / ( t_k / (1 + sigma^2 m) - (1 + sigma^2 m) z )
//
// for z in the upper half-plane, specialize to Marchenko-Pastur
// (z m^2 + z m + 1 = 0 at H = delta_0, sigma = 1), and invert the transform
// to a density via Im m(x + i eta) / pi.
#pragma once

#include <optional>
#include <vector>

#include "bandlab/spectral_measure.hpp"
#include "bandlab/types.hpp"

namespace bandlab {

struct SolveOptions {
  double tol = 1e-12;
  int max_iter = 10000;           // per continuation level
  double damping_floor = 1.0 / 64.0;
  double imag_floor = 1e-12;      // projection floor, as a fraction of Im z
  double continuation_start = 0.5;
  double continuation_ratio = 0.5;
};

struct PointSolution {
  Complex m;
  double residual = 0.0;
  int iterations = 0;  // cumulative over the continuation chain
};

// Right-hand side of the self-consistent equation at trial value m.
Complex master_rhs(Complex m, HalfPlanePoint z, const SpectralMeasure& measure, double sigma);

// Damped fixed-point iteration m <- (1-theta) m + theta rhs(m), warm-started
// through a geometric continuation in Im z from max(Im z, 0.5) downward.
// Start iterate -1/z, theta halves on residual increase (floor 1/64), and any
// iterate leaving the half-plane is projected back to Im m >= 1e-12 Im z.
// Throws NonConvergenceError (carrying the best iterate) if a level exhausts
// max_iter above tol.
PointSolution solve_fixed_point(HalfPlanePoint z, const SpectralMeasure& measure, double sigma,
                                const SolveOptions& options = {});

// Like solve_fixed_point but iterating directly at z from a caller-supplied
// start value; used internally by the continuation and exposed for warm
// restarts.
PointSolution solve_fixed_point_from(Complex start, HalfPlanePoint z,
                                     const SpectralMeasure& measure, double sigma,
                                     const SolveOptions& options = {});

// Herglotz root of z m^2 + z m + 1 = 0 (the H = delta_0, sigma = 1 case).
Complex mp_closed_form(HalfPlanePoint z);

// Solved grid with per-point diagnostics. Points are independent after their
// own continuation chains, so distinct grid points may run in parallel.
struct LimitSolution {
  std::vector<Complex> grid;
  std::vector<Complex> values;
  std::vector<double> residuals;
  std::vector<int> iterations;
};

std::vector<HalfPlanePoint> horizontal_grid(double x_min, double x_max, int count, double eta);

LimitSolution solve_grid(const std::vector<HalfPlanePoint>& grid, const SpectralMeasure& measure,
                         double sigma, const SolveOptions& options = {}, int threads = 1);

// Stieltjes inversion of a constant-eta horizontal grid:
// density(x) = Im m(x + i eta) / pi.
struct DensityCurve {
  double eta = 0.0;
  std::vector<double> x;
  std::vector<double> density;
};

DensityCurve invert_to_density(const LimitSolution& solution);

// Cumulative trapezoid integral of a nonnegative density on a uniform grid,
// clamped to [0, 1]; evaluates by linear interpolation inside the grid and is
// constant outside.
class LimitCdf {
 public:
  LimitCdf(std::vector<double> density, double x0, double dx);
  explicit LimitCdf(const DensityCurve& curve);

  double operator()(double x) const;

 private:
  std::vector<double> cumulative_;
  double x0_ = 0.0;
  double dx_ = 0.0;
};

}  // namespace bandlab
