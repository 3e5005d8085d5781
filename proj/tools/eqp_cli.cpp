// eqp: batch runner for ergodic quantum process experiments.
//
//   eqp <simulate|lln|clt|spectral|metric-selftest> --config PATH [--out DIR]
//       [--seed-override N] [--jobs N]
//   eqp report --out DIR
//
// Exit codes: 0 all verdicts pass, 1 a verdict fails, 2 config error,
// 3 resource or horizon error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "eqp/errors.hpp"
#include "eqp/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kResourceError = 3;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

int run_experiment(const std::string& name, const Flags& f) {
  eqp::ExperimentConfig cfg;
  if (f.config.empty()) {
    if (name != "metric-selftest") throw eqp::ConfigError("/", "--config is required for " + name);
  } else {
    cfg = eqp::load_config(f.config);
  }
  if (cfg.experiment != name) {
    if (!f.config.empty()) {
      throw eqp::ConfigError("/experiment", "config is for '" + cfg.experiment +
                                                "' but subcommand is '" + name + "'");
    }
    cfg.experiment = name;
  }
  if (f.seed) cfg.seeds = {*f.seed};
  const std::string out = f.out.empty() ? cfg.output : f.out;
  const eqp::ExperimentReport report = eqp::run(cfg, out, f.jobs);
  std::cout << eqp::report_render(report);
  return eqp::exit_code(report);
}

int show_report(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "report.json");
  if (!in) throw eqp::ConfigError("/", "no report.json in " + dir);
  eqp::Json j;
  try {
    in >> j;
  } catch (const eqp::Json::exception& e) {
    throw eqp::ConfigError("/", std::string("report.json is not valid JSON: ") + e.what());
  }
  const eqp::ExperimentReport report = eqp::report_from_json(j);
  std::cout << eqp::report_render(report);
  return eqp::exit_code(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ergodic quantum process experiments"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::string> experiments{"simulate", "lln", "clt", "spectral",
                                             "metric-selftest"};
  for (const auto& name : experiments) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    sub->add_option("--seed-override", flags.seed, "replace the seed list with this seed");
    sub->add_option("--jobs", flags.jobs, "replica-level worker threads")
        ->check(CLI::PositiveNumber);
  }
  CLI::App* report = app.add_subcommand("report", "re-render report.json from a run directory");
  report->add_option("--out", flags.out, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (chosen->get_name() == "report") return show_report(flags.out);
    return run_experiment(chosen->get_name(), flags);
  } catch (const eqp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const eqp::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const eqp::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kResourceError;
  } catch (const eqp::NonConvergenceError& e) {
    std::cerr << "horizon error: " << e.what() << "\n";
    return kResourceError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kResourceError;
  }
}
