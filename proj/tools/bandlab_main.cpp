// bandlab command line: solve limit laws, simulate band ensembles, run
// convergence sweeps and verification checks from a JSON config.
//
// Exit codes: 0 ok, 2 config error, 3 numerical non-convergence (partial
// results written and flagged in the manifest), 4 I/O error.
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bandlab/io.hpp"
#include "bandlab/runner.hpp"

namespace {

bool color_enabled() {
  if (std::getenv("NO_COLOR") != nullptr) return false;
  return isatty(fileno(stderr)) != 0;
}

void log_line(const std::string& msg, bool error = false) {
  const bool color = color_enabled();
  const char* prefix = error ? (color ? "\x1b[31merror:\x1b[0m " : "error: ") : "";
  std::fprintf(stderr, "%s%s\n", prefix, msg.c_str());
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<double> tol;
};

void attach_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file; flags override its fields");
  cmd->add_option("--seed", flags.seed, "master seed (u64)");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--threads", flags.threads, "worker cap; results identical at any value");
  cmd->add_option("--tol", flags.tol, "solver tolerance override");
}

int execute(bandlab::Mode mode, const CommonFlags& flags) {
  bandlab::ExperimentConfig config;
  try {
    if (!flags.config_path.empty())
      config = bandlab::ExperimentConfig::load_file(flags.config_path);
    config.mode = mode;
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out) config.out = *flags.out;
    if (flags.threads) config.threads = *flags.threads;
    if (flags.tol) config.tol = *flags.tol;
    config.validate();
  } catch (const bandlab::ConfigError& e) {
    log_line(e.what(), true);
    return 2;
  }

  try {
    const bandlab::RunOutcome outcome = bandlab::run_experiment(config, config.out);
    for (const std::string& f : outcome.files) log_line("wrote " + config.out + "/" + f);
    if (outcome.partial) log_line("some points did not converge; results flagged as partial", true);
    return outcome.exit_code;
  } catch (const bandlab::io::IoError& e) {
    log_line(e.what(), true);
    return 4;
  } catch (const bandlab::NonConvergenceError& e) {
    log_line(e.what(), true);
    return 3;
  } catch (const std::exception& e) {
    log_line(e.what(), true);
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral laboratory for random band matrices"};
  app.require_subcommand(1);

  CommonFlags flags;
  bandlab::Mode mode = bandlab::Mode::Solve;

  auto* solve = app.add_subcommand("solve", "solve the limiting law on a z-grid");
  auto* simulate = app.add_subcommand("simulate", "sample one ensemble and dump its spectrum");
  auto* sweep = app.add_subcommand("sweep", "convergence sweep over matrix sizes");
  auto* verify = app.add_subcommand("verify", "statistical and exact-oracle checks");
  for (auto* cmd : {solve, simulate, sweep, verify}) attach_common(cmd, flags);
  solve->callback([&] { mode = bandlab::Mode::Solve; });
  simulate->callback([&] { mode = bandlab::Mode::Simulate; });
  sweep->callback([&] { mode = bandlab::Mode::Sweep; });
  verify->callback([&] { mode = bandlab::Mode::Verify; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags are config errors
  }
  return execute(mode, flags);
}
