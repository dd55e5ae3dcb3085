// Configuration-driven front end shared by the CLI and the test suites:
// parse/validate a JSON experiment description, execute the requested
// pipeline, and emit result tables plus a reproduction manifest.
//
// Result tables are byte-identical across reruns and worker counts; only the
// manifest carries timestamps.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// vendored single-header nlohmann/json, on the top-level include path
#include "json.hpp"

#include "bandlab/rng.hpp"
#include "bandlab/spectral_measure.hpp"

namespace bandlab {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { Solve, Simulate, Sweep, Verify };

const char* mode_to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct GridSpec {
  double x_min = -1.0;
  double x_max = 5.0;
  int x_count = 401;
  double eta = 1e-3;
};

// Either an explicit half-bandwidth or the exponent rule "n^a/2", meaning
// b(n) = max(1, ceil(n^a / 2)) clamped to the largest band fitting n.
struct BandwidthSpec {
  bool power = false;
  int value = 50;
  double exponent = 0.8;

  static BandwidthSpec explicit_value(int b) { return {false, b, 0.0}; }
  static BandwidthSpec power_rule(double a) { return {true, 0, a}; }

  int resolve(int n) const;
  std::string label() const;
};

struct VerifyParams {
  std::vector<std::string> checks = {"rank-perturbation", "truncation-bound",
                                     "sherman-morrison"};
  int rank_n = 20;
  std::vector<int> rank_ks = {1, 3, 5};
  int rank_trials = 100;
  std::vector<double> truncation_alphas;  // empty -> log(row budget)
  int truncation_seeds = 50;
  std::vector<double> norm_tail_ts = {2.0, 4.0, 6.0};
  int quad_moment_order = 1;
  std::vector<int> quad_sizes = {200, 400, 800, 1600};
  int quad_trials = 32;
  std::vector<double> partial_trace_ts;  // empty -> sqrt(32 n) / eta-of-z (z = i)
  int partial_trace_holdout_factor = 10;
};

struct ExperimentConfig {
  Mode mode = Mode::Solve;
  std::vector<SpectralMeasure::Atom> h_atoms = {{0.0, 1.0}};
  double sigma = 1.0;
  int n = 1000;
  BandwidthSpec bandwidth{};
  bool periodic = true;
  rng::NoiseKind dist = rng::NoiseKind::ComplexGaussian;
  std::uint64_t seed = 1;
  int trials = 10;
  GridSpec grid{};
  std::string out = "results";
  double tol = 1e-12;
  int max_iter = 10000;
  int threads = 1;
  std::vector<int> sizes = {500, 1000, 2000};
  VerifyParams verify{};

  SpectralMeasure measure() const { return SpectralMeasure::from_atoms(h_atoms); }

  // Checks every field against the preconditions of the module that consumes
  // it; throws ConfigError.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load_file(const std::filesystem::path& path);
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 3 non-convergence (partial results), 4 I/O error
  bool partial = false;
  std::vector<std::string> files;  // written relative to the output directory
};

RunOutcome run_experiment(const ExperimentConfig& config,
                          const std::filesystem::path& out_dir);

}  // namespace bandlab
