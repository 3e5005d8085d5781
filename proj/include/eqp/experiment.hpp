#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eqp/json_io.hpp"

namespace eqp {

struct VerdictLine {
  std::string name;
  bool pass = false;
  /// e.g. "p=0.34".
  std::string observed;
  /// e.g. "(>0.01)".
  std::string tolerance;
  /// The property this verdict instantiates.
  std::string invariant;
};

struct ManifestEntry {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  Json estimates = Json::object();
  /// Data files only, sorted by name; report.json and report.txt are excluded.
  std::vector<ManifestEntry> manifest;
  std::vector<VerdictLine> verdicts;
  double wall_clock = 0.0;

  bool all_pass() const;
};

/// Runs the configured experiment, writing CSV/JSON artifacts, report.json
/// and report.txt into `out`. Output bytes depend only on the config.
/// Throws ConfigError for invalid settings and ResourceError when a budget or
/// horizon is exhausted.
ExperimentReport run(const ExperimentConfig& config, const std::filesystem::path& out,
                     int jobs = 1);

/// Header line plus one line per verdict in report order.
std::string report_render(const ExperimentReport& report);

Json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const Json& j);

/// 0 when every verdict passes, 1 otherwise.
int exit_code(const ExperimentReport& report);

}  // namespace eqp
