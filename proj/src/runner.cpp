#include "bandlab/runner.hpp"

#include <Eigen/Core>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>

#include "bandlab/ensemble.hpp"
#include "bandlab/io.hpp"
#include "bandlab/limit_law.hpp"
#include "bandlab/parallel.hpp"
#include "bandlab/spectra.hpp"
#include "bandlab/verify.hpp"

namespace bandlab {

using nlohmann::json;
using nlohmann::ordered_json;

const char* mode_to_string(Mode mode) {
  switch (mode) {
    case Mode::Solve: return "solve";
    case Mode::Simulate: return "simulate";
    case Mode::Sweep: return "sweep";
    case Mode::Verify: return "verify";
  }
  throw std::logic_error("unknown mode");
}

Mode mode_from_string(const std::string& name) {
  if (name == "solve") return Mode::Solve;
  if (name == "simulate") return Mode::Simulate;
  if (name == "sweep") return Mode::Sweep;
  if (name == "verify") return Mode::Verify;
  throw ConfigError("unknown mode: " + name);
}

int BandwidthSpec::resolve(int n) const {
  if (n < 1) throw ConfigError("bandwidth rule: n must be >= 1");
  int b = power ? std::max(1, static_cast<int>(std::ceil(std::pow(static_cast<double>(n), exponent) / 2.0)))
                : value;
  b = std::min(b, (n - 1) / 2);  // largest band fitting n
  return std::max(b, 0);
}

std::string BandwidthSpec::label() const {
  if (!power) return "b=" + std::to_string(value);
  return "n^" + io::format_double(exponent) + "/2";
}

namespace {

BandwidthSpec bandwidth_from_json(const json& j) {
  if (j.is_number_integer()) return BandwidthSpec::explicit_value(j.get<int>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    static const std::regex rule(R"(^n\^([0-9eE.+-]+)/2$)");
    std::smatch m;
    if (std::regex_match(s, m, rule)) return BandwidthSpec::power_rule(std::stod(m[1].str()));
    throw ConfigError("bandwidth string must look like \"n^0.8/2\", got: " + s);
  }
  throw ConfigError("bandwidth must be an integer or an \"n^a/2\" rule string");
}

json bandwidth_to_json(const BandwidthSpec& spec) {
  if (spec.power) return "n^" + io::format_double(spec.exponent) + "/2";
  return spec.value;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    SpectralMeasure::from_atoms(h_atoms);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("h_atoms: ") + e.what());
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!bandwidth.power && bandwidth.value < 0) throw ConfigError("bandwidth must be >= 0");
  if (bandwidth.power && !(bandwidth.exponent > 0.0 && bandwidth.exponent < 1.0))
    throw ConfigError("bandwidth exponent must lie in (0, 1)");
  if (!bandwidth.power && 2 * bandwidth.value + 1 > n && mode != Mode::Sweep)
    throw ConfigError("band 2b+1 exceeds n");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (grid.x_count < 1) throw ConfigError("grid.x_count must be >= 1");
  if (grid.x_count > 1 && !(grid.x_max > grid.x_min))
    throw ConfigError("grid.x_max must exceed grid.x_min");
  if (!(grid.eta > 0.0)) throw ConfigError("grid.eta must be > 0");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (mode == Mode::Sweep) {
    if (sizes.empty()) throw ConfigError("sweep needs a nonempty sizes list");
    for (int s : sizes)
      if (s < 3) throw ConfigError("sweep sizes must be >= 3");
  }
  if (mode == Mode::Verify) {
    if (verify.checks.empty()) throw ConfigError("verify needs a nonempty checks list");
    for (const std::string& check : verify.checks)
      if (check != "rank-perturbation" && check != "truncation-bound" &&
          check != "sherman-morrison" && check != "norm-tail" && check != "quadratic-form" &&
          check != "partial-trace")
        throw ConfigError("unknown verify check: " + check);
    if (verify.rank_n < 1 || verify.rank_n > 50)
      throw ConfigError("verify.rank_n must be in [1, 50]");
    for (int k : verify.rank_ks)
      if (k < 0 || k > verify.rank_n) throw ConfigError("verify.rank_ks entries must be in [0, rank_n]");
    if (verify.rank_trials < 1) throw ConfigError("verify.rank_trials must be >= 1");
    if (verify.truncation_seeds < 1) throw ConfigError("verify.truncation_seeds must be >= 1");
    for (double a : verify.truncation_alphas)
      if (!(a > 0.0)) throw ConfigError("verify.truncation_alphas must be > 0");
    if (verify.quad_moment_order < 1) throw ConfigError("verify.quad_moment_order must be >= 1");
    if (verify.quad_trials < 1) throw ConfigError("verify.quad_trials must be >= 1");
    for (int s : verify.quad_sizes)
      if (s < 3) throw ConfigError("verify.quad_sizes must be >= 3");
    if (verify.partial_trace_holdout_factor < 10)
      throw ConfigError("verify.partial_trace_holdout_factor must be >= 10");
  }
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["mode"] = mode_to_string(mode);
  json atoms = json::array();
  for (const auto& a : h_atoms) atoms.push_back({a.location, a.weight});
  j["h_atoms"] = atoms;
  j["sigma"] = sigma;
  j["n"] = n;
  j["bandwidth"] = bandwidth_to_json(bandwidth);
  j["periodic"] = periodic;
  j["dist"] = rng::to_string(dist);
  j["seed"] = seed;
  j["trials"] = trials;
  j["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"x_count", grid.x_count}, {"eta", grid.eta}};
  j["out"] = out;
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["threads"] = threads;
  j["sizes"] = sizes;
  j["verify"] = {{"checks", verify.checks},
                 {"rank_n", verify.rank_n},
                 {"rank_ks", verify.rank_ks},
                 {"rank_trials", verify.rank_trials},
                 {"truncation_alphas", verify.truncation_alphas},
                 {"truncation_seeds", verify.truncation_seeds},
                 {"norm_tail_ts", verify.norm_tail_ts},
                 {"quad_moment_order", verify.quad_moment_order},
                 {"quad_sizes", verify.quad_sizes},
                 {"quad_trials", verify.quad_trials},
                 {"partial_trace_ts", verify.partial_trace_ts},
                 {"partial_trace_holdout_factor", verify.partial_trace_holdout_factor}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("h_atoms")) {
      c.h_atoms.clear();
      for (const auto& a : j.at("h_atoms"))
        c.h_atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    }
    read_if(j, "sigma", c.sigma);
    read_if(j, "n", c.n);
    if (j.contains("bandwidth")) c.bandwidth = bandwidth_from_json(j.at("bandwidth"));
    read_if(j, "periodic", c.periodic);
    if (j.contains("dist")) c.dist = rng::noise_kind_from_string(j.at("dist").get<std::string>());
    read_if(j, "seed", c.seed);
    read_if(j, "trials", c.trials);
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      read_if(g, "x_min", c.grid.x_min);
      read_if(g, "x_max", c.grid.x_max);
      read_if(g, "x_count", c.grid.x_count);
      read_if(g, "eta", c.grid.eta);
    }
    read_if(j, "out", c.out);
    read_if(j, "tol", c.tol);
    read_if(j, "max_iter", c.max_iter);
    read_if(j, "threads", c.threads);
    read_if(j, "sizes", c.sizes);
    if (j.contains("verify")) {
      const json& v = j.at("verify");
      read_if(v, "checks", c.verify.checks);
      read_if(v, "rank_n", c.verify.rank_n);
      read_if(v, "rank_ks", c.verify.rank_ks);
      read_if(v, "rank_trials", c.verify.rank_trials);
      read_if(v, "truncation_alphas", c.verify.truncation_alphas);
      read_if(v, "truncation_seeds", c.verify.truncation_seeds);
      read_if(v, "norm_tail_ts", c.verify.norm_tail_ts);
      read_if(v, "quad_moment_order", c.verify.quad_moment_order);
      read_if(v, "quad_sizes", c.verify.quad_sizes);
      read_if(v, "quad_trials", c.verify.quad_trials);
      read_if(v, "partial_trace_ts", c.verify.partial_trace_ts);
      read_if(v, "partial_trace_holdout_factor", c.verify.partial_trace_holdout_factor);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(j);
}

namespace {

namespace fs = std::filesystem;

struct RunContext {
  const ExperimentConfig& config;
  fs::path out_dir;
  RunOutcome outcome;
  ordered_json summary;

  void emit(const std::string& name, const std::string& content) {
    io::write_text_file(out_dir / name, content);
    outcome.files.push_back(name);
  }
};

void run_solve(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const SpectralMeasure measure = c.measure();
  const auto grid = horizontal_grid(c.grid.x_min, c.grid.x_max, c.grid.x_count, c.grid.eta);
  SolveOptions options;
  options.tol = c.tol;
  options.max_iter = c.max_iter;

  struct Row {
    Complex z, m;
    double residual;
    int iterations;
    bool converged;
  };
  std::vector<Row> rows(grid.size());
  std::atomic<int> failures{0};
  parallel_for(static_cast<int>(grid.size()), c.threads, [&](int k) {
    Row row{grid[k].value(), 0.0, 0.0, 0, true};
    try {
      const PointSolution p = solve_fixed_point(grid[k], measure, c.sigma, options);
      row.m = p.m;
      row.residual = p.residual;
      row.iterations = p.iterations;
    } catch (const NonConvergenceError& e) {
      row.m = e.best_iterate;
      row.residual = e.residual;
      row.iterations = e.iterations;
      row.converged = false;
      failures.fetch_add(1);
    }
    rows[k] = row;
  });

  io::CsvTable table;
  table.schema = "bandlab.solve.v1";
  table.columns = {"x", "re_m", "im_m", "density", "residual", "iters"};
  for (const Row& row : rows)
    table.add_row({io::format_double(row.z.real()), io::format_double(row.m.real()),
                   io::format_double(row.m.imag()),
                   io::format_double(row.m.imag() / M_PI), io::format_double(row.residual),
                   io::format_int(row.iterations)});
  ctx.emit("result.csv", table.serialize());

  if (failures.load() > 0) {
    ctx.outcome.partial = true;
    ctx.outcome.exit_code = 3;
    ctx.summary["unconverged_points"] = failures.load();
  }
}

void run_simulate(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const SpectralMeasure measure = c.measure();
  const BandShape shape = BandShape::make(c.n, c.bandwidth.resolve(c.n), c.periodic);
  const bool zero_measure =
      measure.atoms.size() == 1 && measure.atoms.front().location == 0.0;

  EsdSample esd;
  if (rng::is_complex_kind(c.dist)) {
    const auto noise = sample_noise<Complex>(EnsembleConfig::make(shape, c.sigma, c.dist, c.seed));
    const auto det = zero_measure ? BandMatrix::zero(shape)
                                  : deterministic_from_measure<Complex>(measure, shape);
    esd = gram_spectrum(assemble_signal_plus_noise(det, noise, c.sigma));
  } else {
    const auto noise = sample_noise<double>(EnsembleConfig::make(shape, c.sigma, c.dist, c.seed));
    const auto det = zero_measure ? RealBandMatrix::zero(shape)
                                  : deterministic_from_measure<double>(measure, shape);
    esd = gram_spectrum(assemble_signal_plus_noise(det, noise, c.sigma));
  }

  const auto grid = horizontal_grid(c.grid.x_min, c.grid.x_max, c.grid.x_count, c.grid.eta);
  io::CsvTable table;
  table.schema = "bandlab.simulate.v1";
  table.columns = {"x", "eta", "re_mn", "im_mn"};
  ordered_json transform = ordered_json::array();
  for (const auto& z : grid) {
    const Complex mn = empirical_stieltjes(esd, z);
    table.add_row({io::format_double(z.real()), io::format_double(z.imag()),
                   io::format_double(mn.real()), io::format_double(mn.imag())});
    transform.push_back({z.real(), mn.real(), mn.imag()});
  }
  ctx.emit("result.csv", table.serialize());
  ctx.summary["eta"] = c.grid.eta;
  ctx.summary["m_n"] = transform;  // rows [x, re, im]

  io::CsvTable eigen_table;
  eigen_table.schema = "bandlab.eigenvalues.v1";
  eigen_table.columns = {"eigenvalue"};
  for (Eigen::Index i = 0; i < esd.eigenvalues.size(); ++i)
    eigen_table.add_row({io::format_double(esd.eigenvalues(i))});
  ctx.emit("eigenvalues.csv", eigen_table.serialize());

  ctx.summary["n"] = shape.n;
  ctx.summary["bandwidth"] = shape.bandwidth;
  ctx.summary["row_budget"] = shape.row_budget();
  ctx.summary["trace"] = esd.eigenvalues.sum();
  ctx.summary["lambda_min"] = esd.eigenvalues(0);
  ctx.summary["lambda_max"] = esd.eigenvalues(esd.eigenvalues.size() - 1);
}

void run_sweep(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  verify::SweepSettings settings;
  settings.measure = c.measure();
  settings.sigma = c.sigma;
  settings.dist = c.dist;
  settings.periodic = c.periodic;
  settings.seed = c.seed;
  settings.threads = c.threads;
  settings.solver.tol = c.tol;
  settings.solver.max_iter = c.max_iter;

  const auto grid = horizontal_grid(c.grid.x_min, c.grid.x_max, c.grid.x_count, c.grid.eta);
  const auto rule = [&](int n) { return c.bandwidth.resolve(n); };
  const verify::SweepReport report =
      verify::convergence_sweep(settings, c.sizes, rule, c.bandwidth.label(), c.trials, grid);

  io::CsvTable table;
  table.schema = "bandlab.sweep.v1";
  table.columns = {"n",            "bandwidth",   "row_budget",  "trials",
                   "mean_sup_gap", "se_sup_gap",  "mean_det_gap", "se_det_gap",
                   "ks_pooled"};
  for (const auto& p : report.points)
    table.add_row({io::format_int(p.n), io::format_int(p.bandwidth), io::format_int(p.row_budget),
                   io::format_int(report.trials), io::format_double(p.sup_gap.mean),
                   io::format_double(p.sup_gap.se), io::format_double(p.det_gap.mean),
                   io::format_double(p.det_gap.se), io::format_double(p.ks_pooled)});
  ctx.emit("result.csv", table.serialize());
  ctx.summary["bandwidth_rule"] = report.rule_label;
}

void run_verify(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const VerifyParams& v = c.verify;

  io::CsvTable table;
  table.schema = "bandlab.verify.v1";
  table.columns = {"check", "param", "statistic", "bound", "pass"};
  auto add = [&](const std::string& check, const std::string& param, double stat, double bound,
                 bool pass) {
    table.add_row({check, param, io::format_double(stat), io::format_double(bound),
                   pass ? "1" : "0"});
  };
  bool all_ok = true;

  for (const std::string& check : v.checks) {
    if (check == "rank-perturbation") {
      for (std::size_t i = 0; i < v.rank_ks.size(); ++i) {
        const int k = v.rank_ks[i];
        const auto res = verify::rank_perturbation_check(
            v.rank_trials, v.rank_n, k, rng::derive_stream(c.seed, 100 + i));
        add(check, "k=" + std::to_string(k), res.max_distance, res.bound + 1e-10, res.ok);
        all_ok = all_ok && res.ok;
      }
    } else if (check == "truncation-bound") {
      const BandShape shape = BandShape::make(c.n, c.bandwidth.resolve(c.n), c.periodic);
      std::vector<double> alphas = v.truncation_alphas;
      if (alphas.empty()) alphas = {std::log(static_cast<double>(shape.row_budget()))};
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        double worst = 0.0, bound = 0.0;
        bool ok = true;
        for (int s = 0; s < v.truncation_seeds; ++s) {
          const auto res = verify::truncation_bound_check(
              c.measure(), shape, alphas[i], c.sigma, c.dist,
              rng::derive_stream(c.seed, 200 + i * 1000 + s));
          worst = std::max(worst, res.distance);
          bound = res.bound;
          ok = ok && res.ok;
        }
        add(check, "alpha=" + io::format_double(alphas[i]), worst, bound + 1e-10, ok);
        all_ok = all_ok && ok;
      }
    } else if (check == "sherman-morrison") {
      const double err = verify::sherman_morrison_max_error(50, 10, rng::derive_stream(c.seed, 300));
      add(check, "n=10", err, 1e-8, err <= 1e-8);
      all_ok = all_ok && err <= 1e-8;
    } else if (check == "norm-tail") {
      const BandShape shape = BandShape::make(c.n, c.bandwidth.resolve(c.n), c.periodic);
      const auto report = verify::norm_tail_experiment(shape, c.trials, v.norm_tail_ts,
                                                       rng::derive_stream(c.seed, 400), c.threads);
      for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
        const bool ok = report.frequencies[i] <= report.bounds[i];
        add(check, "t=" + io::format_double(report.thresholds[i]), report.frequencies[i],
            report.bounds[i], ok);
        all_ok = all_ok && ok;
      }
    } else if (check == "quadratic-form") {
      verify::QuadFormSettings settings;
      settings.dist = c.dist;
      settings.periodic = c.periodic;
      settings.sigma = c.sigma;
      settings.threads = c.threads;
      const auto rule = [&](int n) { return c.bandwidth.resolve(n); };
      const auto scaling = verify::quadratic_form_scaling(
          verify::QuadFormKernel::LeaveOneOutResolvent, v.quad_sizes, rule, settings,
          v.quad_moment_order, v.quad_trials, rng::derive_stream(c.seed, 500));
      const bool ok_n = scaling.slope_vs_n >= 0.5 && scaling.slope_vs_n <= 1.5;
      const bool ok_c = scaling.slope_vs_row_budget >= 0.5 && scaling.slope_vs_row_budget <= 1.5;
      add(check, "slope_vs_n", scaling.slope_vs_n, 1.5, ok_n);
      add(check, "slope_vs_row_budget", scaling.slope_vs_row_budget, 1.5, ok_c);
      all_ok = all_ok && ok_n && ok_c;
    } else if (check == "partial-trace") {
      const BandShape shape = BandShape::make(c.n, c.bandwidth.resolve(c.n), c.periodic);
      const HalfPlanePoint z{0.0, 1.0};
      std::vector<double> ts = v.partial_trace_ts;
      if (ts.empty()) ts = {std::sqrt(32.0 * shape.n) / z.imag()};
      const auto report = verify::partial_trace_tail_experiment(
          shape, z, c.trials, ts, c.dist, rng::derive_stream(c.seed, 600), c.threads,
          v.partial_trace_holdout_factor);
      for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
        const double allowance = report.bounds[i] + 3.0 * report.stderrs[i];
        const bool ok = report.frequencies[i] <= allowance;
        add(check, "t=" + io::format_double(report.thresholds[i]), report.frequencies[i],
            allowance, ok);
        all_ok = all_ok && ok;
      }
    } else {
      throw ConfigError("unknown verify check: " + check);
    }
  }

  ctx.emit("result.csv", table.serialize());
  ctx.summary["all_checks_passed"] = all_ok;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  RunContext ctx{config, out_dir, {}, ordered_json::object()};
  try {
    std::filesystem::create_directories(out_dir);
    switch (config.mode) {
      case Mode::Solve: run_solve(ctx); break;
      case Mode::Simulate: run_simulate(ctx); break;
      case Mode::Sweep: run_sweep(ctx); break;
      case Mode::Verify: run_verify(ctx); break;
    }
  } catch (const io::IoError&) {
    ctx.outcome.exit_code = 4;
    throw;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json manifest;
  manifest["schema"] = "bandlab.manifest.v1";
  manifest["config"] = config.to_json();
  manifest["seed"] = config.seed;
  manifest["versions"] = {{"bandlab", "0.1.0"},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)}};
  manifest["partial"] = ctx.outcome.partial;
  manifest["files"] = ctx.outcome.files;
  manifest["summary"] = ctx.summary;
  manifest["wall_time_seconds"] = wall;
  io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  ctx.outcome.files.push_back("manifest.json");

  return ctx.outcome;
}

}  // namespace bandlab

namespace bandlab::io {

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out.good()) throw IoError("write failed: " + path.string());
}

}  // namespace bandlab::io
