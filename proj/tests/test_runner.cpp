#include "bandlab/runner.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "bandlab/io.hpp"
#include "doctest.h"

using namespace bandlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() /
                       ("bandlab_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("doubles format to shortest round-trip representation") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(mantissa(eng), exponent(eng));
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0) == "1");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv tables refuse ragged rows and serialize with the schema line") {
  io::CsvTable t;
  t.schema = "bandlab.test.v1";
  t.columns = {"a", "b"};
  t.add_row({"1", "2"});
  CHECK_THROWS_AS(t.add_row({"1"}), std::logic_error);
  CHECK(t.serialize() == "# schema: bandlab.test.v1\na,b\n1,2\n");
}

TEST_CASE("config round-trips through json losslessly") {
  ExperimentConfig config;
  config.mode = Mode::Sweep;
  config.h_atoms = {{1.0, 0.5}, {4.0, 0.5}};
  config.sigma = 0.5;
  config.bandwidth = BandwidthSpec::power_rule(0.8);
  config.dist = rng::NoiseKind::Rademacher;
  config.seed = 0xDEADBEEFCAFEBABEull;
  config.trials = 4;
  config.sizes = {60, 120};
  config.grid = {-1.0, 6.0, 25, 0.5};
  config.tol = 1e-10;

  const auto j = config.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.seed == config.seed);
  CHECK(back.bandwidth.power);
  CHECK(back.bandwidth.exponent == 0.8);
  CHECK(back.bandwidth.label() == "n^0.8/2");
}

TEST_CASE("bandwidth rules resolve and clamp") {
  const BandwidthSpec power = BandwidthSpec::power_rule(0.8);
  CHECK(power.resolve(500) == 73);    // ceil(500^0.8 / 2)
  CHECK(power.resolve(1000) == 126);
  CHECK(power.resolve(2000) == 219);
  CHECK(power.resolve(3) == 1);
  const BandwidthSpec wide = BandwidthSpec::explicit_value(400);
  CHECK(wide.resolve(100) == 49);  // clamped to fit
}

TEST_CASE("config validation rejects out-of-contract fields") {
  auto expect_reject = [](const char* text) {
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(text)), ConfigError);
  };
  expect_reject(R"({"mode": "explode"})");
  expect_reject(R"({"sigma": -1.0})");
  expect_reject(R"({"grid": {"eta": 0.0}})");
  expect_reject(R"({"h_atoms": [[1.0, 0.25]]})");
  expect_reject(R"({"threads": 0})");
  expect_reject(R"({"n": 10, "bandwidth": 6, "mode": "simulate"})");
  expect_reject(R"({"bandwidth": "nonsense"})");
  expect_reject(R"({"mode": "verify", "verify": {"checks": ["made-up-check"]}})");
  CHECK_THROWS_AS(ExperimentConfig::load_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("solve runs are reproducible byte for byte") {
  ExperimentConfig config;
  config.mode = Mode::Solve;
  config.grid = {-1.0, 5.0, 41, 0.02};
  config.seed = 5;

  const fs::path d1 = fresh_dir("solve1");
  const fs::path d2 = fresh_dir("solve2");
  const RunOutcome o1 = run_experiment(config, d1);
  CHECK(o1.exit_code == 0);
  CHECK(fs::exists(d1 / "result.csv"));
  CHECK(fs::exists(d1 / "manifest.json"));

  config.threads = 3;
  run_experiment(config, d2);
  CHECK(slurp(d1 / "result.csv") == slurp(d2 / "result.csv"));

  SUBCASE("the manifest alone reproduces the table") {
    const auto manifest = nlohmann::json::parse(slurp(d1 / "manifest.json"));
    const ExperimentConfig replay = ExperimentConfig::from_json(manifest.at("config"));
    const fs::path d3 = fresh_dir("solve3");
    run_experiment(replay, d3);
    CHECK(slurp(d3 / "result.csv") == slurp(d1 / "result.csv"));
  }

  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("starved solver budget yields exit 3 with flagged partial results") {
  ExperimentConfig config;
  config.mode = Mode::Solve;
  config.grid = {1.5, 2.5, 5, 1e-3};
  config.max_iter = 1;

  const fs::path dir = fresh_dir("partial");
  const RunOutcome outcome = run_experiment(config, dir);
  CHECK(outcome.exit_code == 3);
  CHECK(outcome.partial);
  CHECK(fs::exists(dir / "result.csv"));  // best iterates still written
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("partial") == true);
  CHECK(manifest.at("summary").at("unconverged_points").get<int>() > 0);
  fs::remove_all(dir);
}

TEST_CASE("simulate run writes the spectrum and the transform table") {
  ExperimentConfig config;
  config.mode = Mode::Simulate;
  config.n = 60;
  config.bandwidth = BandwidthSpec::explicit_value(6);
  config.dist = rng::NoiseKind::RealGaussian;
  config.grid = {-1.0, 5.0, 13, 0.5};
  config.seed = 9;

  const fs::path dir = fresh_dir("simulate");
  const RunOutcome outcome = run_experiment(config, dir);
  CHECK(outcome.exit_code == 0);

  const std::string result = slurp(dir / "result.csv");
  CHECK(result.rfind("# schema: bandlab.simulate.v1", 0) == 0);

  const std::string eigen_table = slurp(dir / "eigenvalues.csv");
  CHECK(static_cast<int>(std::count(eigen_table.begin(), eigen_table.end(), '\n')) ==
        config.n + 2);  // schema + header + n rows

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("summary").at("n") == 60);
  CHECK(manifest.at("partial") == false);
  fs::remove_all(dir);
}

TEST_CASE("sweep and verify runs produce stable tables at any thread count") {
  ExperimentConfig config;
  config.mode = Mode::Sweep;
  config.sizes = {48, 96};
  config.bandwidth = BandwidthSpec::explicit_value(6);
  config.dist = rng::NoiseKind::RealGaussian;
  config.trials = 2;
  config.grid = {-1.0, 5.0, 9, 0.5};
  config.seed = 3;

  const fs::path d1 = fresh_dir("sweep1");
  run_experiment(config, d1);
  config.threads = 3;
  const fs::path d2 = fresh_dir("sweep2");
  run_experiment(config, d2);
  CHECK(slurp(d1 / "result.csv") == slurp(d2 / "result.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);

  ExperimentConfig vconfig;
  vconfig.mode = Mode::Verify;
  vconfig.n = 20;
  vconfig.bandwidth = BandwidthSpec::explicit_value(2);
  vconfig.seed = 4;
  vconfig.verify.checks = {"rank-perturbation", "sherman-morrison", "truncation-bound"};
  vconfig.verify.rank_n = 10;
  vconfig.verify.rank_ks = {1, 2};
  vconfig.verify.rank_trials = 10;
  vconfig.verify.truncation_seeds = 5;
  vconfig.h_atoms = {{1.0, 0.5}, {4.0, 0.5}};

  const fs::path dv = fresh_dir("verify");
  const RunOutcome outcome = run_experiment(vconfig, dv);
  CHECK(outcome.exit_code == 0);
  const std::string table = slurp(dv / "result.csv");
  CHECK(table.rfind("# schema: bandlab.verify.v1", 0) == 0);
  CHECK(table.find(",0\n") == std::string::npos);  // every check passed
  fs::remove_all(dv);
}
