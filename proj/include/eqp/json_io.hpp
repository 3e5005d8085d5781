#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqp/drivers.hpp"

namespace eqp {

using Json = nlohmann::json;

struct DriverSpec {
  std::string kind = "iid";
  /// Map expressions in the map-family grammar, e.g. "depolarizing(0.5)".
  std::vector<std::string> maps{"depolarizing(0.5)"};
  std::vector<double> probs;                     // iid
  std::vector<std::vector<double>> transition;   // markov
  double beta = 0.0;                             // rotation
  std::vector<double> arcs;                      // rotation
  int index = 0;                                 // deterministic
  bool operator==(const DriverSpec&) const = default;
};

/// "mixed", "basis<i>" or "random" (Haar pure state from the seed).
struct ProbeSpec {
  std::string x = "mixed";
  std::string y = "mixed";
  int pairs = 4;
  bool operator==(const ProbeSpec&) const = default;
};

struct Tolerances {
  double ks_alpha = 0.01;
  double sigma_rel = 0.05;
  double perron = 1e-8;
  double metric = 1e-12;
  double axioms = 1e-9;
  double telescoping = 1e-9;
  double kappa_rel = 0.02;
  std::optional<double> sigma2_ref;
  std::optional<double> kappa_ref;
  bool operator==(const Tolerances&) const = default;
};

struct ExperimentParams {
  std::vector<std::int64_t> n_grid;
  std::int64_t horizon = 64;
  std::optional<double> r;
  double p = 3.0;
  int k_max = 50;
  int mc_inner = 64;
  int outer = 2000;
  /// 0 means n * n_replicas.
  std::int64_t batch_length = 0;
  /// Replicas of the disjoint block used for the l plug-in.
  int l_replicas = 200;
  std::optional<double> alpha;
  bool override_gate = false;
  bool operator==(const ExperimentParams&) const = default;
};

struct ExperimentConfig {
  std::string experiment = "metric-selftest";
  DriverSpec driver;
  std::int64_t n = 2000;
  int n_replicas = 200;
  std::vector<std::uint64_t> seeds{42};
  ProbeSpec probes;
  Tolerances tolerances;
  ExperimentParams params;
  std::string output = "out";
  bool operator==(const ExperimentConfig&) const = default;
};

/// Validates and converts; throws ConfigError naming the JSON pointer of the
/// first offending value. Unknown keys are rejected.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Emits every field; parse(dump(c)) == c and dumps are byte-stable.
Json config_to_json(const ExperimentConfig& c);

/// Builds the driver, reporting bad parameters as ConfigError under /driver.
Driver build_driver(const DriverSpec& spec, std::uint64_t seed = 0);

/// printf("%.17g"): 17 significant digits, so the text reads back exactly.
std::string format17(double x);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace eqp
