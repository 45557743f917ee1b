#pragma once

// Experiment configuration, the five CLI commands as library calls, and the
// report renderer. Reports are JSON documents with sorted keys; the layout
// is described by docs/report.schema.json.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "osslab/oracles.hpp"

namespace osslab::harness {

using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string experiment;
  /// Sub-selection: save|load|audit|roundtrip for "instance", a game name
  /// or "all" for "games".
  std::string action;
  oracles::KeyFireParams params;
  std::uint64_t seed = 1;
  /// 0 means the command's own default.
  int trials = 0;
  int threads = 1;
  bool exact_sign = false;
  std::optional<std::string> instance_path;
  /// Threshold overrides by name; anything absent uses the default.
  json thresholds = json::object();
  /// clone-fidelity: clone chain depth (0 skips the chain).
  int chain_depth = 3;
  /// clone-fidelity: random zeta states for the per-iteration check (0 skips).
  int zeta_count = 20;
  int zeta_support = 3;
  /// Adds wall-clock seconds to the report, which makes it run-dependent.
  bool timing = false;

  /// Throws ParameterError on anything the commands would reject later.
  void validate() const;
  json to_json() const;
};

/// Reads the keys of a config document over `base`. Unknown keys are an
/// error so that typos do not silently fall back to defaults.
ExperimentConfig config_from_json(const json& doc, ExperimentConfig base = {});

/// "n,r,k[,att[,sig[,nu[,jmax]]]]" over the given parameters.
oracles::KeyFireParams parse_params(const std::string& text, oracles::KeyFireParams base = {});

struct Check {
  std::string name;
  double value = 0;
  double threshold = 0;
  /// ">=", "<=" or "==". Two-sided 3-sigma checks compare the deviation.
  std::string relation;
  bool passed = false;
};

struct ExperimentReport {
  ExperimentConfig config;
  json trials = json::array();
  json aggregate = json::object();
  std::vector<Check> checks;
  std::optional<double> wall_clock_seconds;

  bool passed() const;
  Check& check(std::string name, double value, std::string relation, double threshold);
  json to_json() const;
};

ExperimentReport cmd_oss_correctness(const ExperimentConfig& config);
ExperimentReport cmd_clone_fidelity(const ExperimentConfig& config);
ExperimentReport cmd_keyfire_endtoend(const ExperimentConfig& config);
ExperimentReport cmd_games(const ExperimentConfig& config);
ExperimentReport cmd_instance(const ExperimentConfig& config);

/// Dispatches on config.experiment, validating first and timing the run
/// when asked.
ExperimentReport run(const ExperimentConfig& config);

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"oss-correctness", "clone-fidelity",
                                              "keyfire-endtoend", "games", "instance"};
  return names;
}

/// Pretty JSON with sorted keys and doubles printed with 12 significant
/// digits. Non-finite doubles become null.
std::string render(const json& doc);

}  // namespace osslab::harness
