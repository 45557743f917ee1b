// Command-line front end for the experiments.
//
//   osslab <command> [action] [--config PATH] [--seed U64] [--trials N]
//          [--params n,r,k,att,sig,nu,jmax] [--exact-sign] [--out PATH]
//          [--threads N] [--instance PATH] [--timing]
//
// Exit status: 0 when every check passed, 1 when a check failed, 2 on a
// usage, configuration or input error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "osslab/harness.hpp"

namespace {

using osslab::harness::ExperimentConfig;
using osslab::harness::json;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> params;
  bool exact_sign = false;
  std::string out;
  std::optional<int> threads;
  std::optional<std::string> instance;
  bool timing = false;
  std::string action;
};

void add_common(CLI::App* cmd, Flags& f, bool takes_action) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override it");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--trials", f.trials, "Trial count (0 = command default)");
  cmd->add_option("--params", f.params, "n,r,k[,att,sig,nu,jmax]");
  cmd->add_flag("--exact-sign", f.exact_sign, "Use the exact signing surrogate");
  cmd->add_option("--out", f.out, "Write the report here instead of stdout");
  cmd->add_option("--threads", f.threads, "Worker threads for trials");
  cmd->add_option("--instance", f.instance, "Instance file to use or write");
  cmd->add_flag("--timing", f.timing, "Add wall-clock seconds to the report");
  if (takes_action) cmd->add_option("action", f.action, "Sub-selection");
}

ExperimentConfig build_config(const std::string& command, const Flags& f) {
  ExperimentConfig config;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw osslab::ParameterError("cannot read config " + f.config_path);
    config = osslab::harness::config_from_json(json::parse(in), config);
  }
  config.experiment = command;
  if (!f.action.empty()) config.action = f.action;
  if (f.seed) config.seed = *f.seed;
  if (f.trials) config.trials = *f.trials;
  if (f.params) config.params = osslab::harness::parse_params(*f.params, config.params);
  if (f.exact_sign) config.exact_sign = true;
  if (f.threads) config.threads = *f.threads;
  if (f.instance) config.instance_path = *f.instance;
  if (f.timing) config.timing = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"osslab: one-shot signature and key-fire experiments"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"oss-correctness", "gen_qkey, sign and verify trials split by good and bad keys"},
      {"clone-fidelity", "Clone fidelity, clone chain and per-iteration checks"},
      {"keyfire-endtoend", "Setup, clone, sign on both copies and verify"},
      {"games", "Security games: [all|oneshot-structural|oss-incompressibility|"
                "rom-incompressibility|subspace-stats|query-weight]"},
      {"instance", "Instance files: [roundtrip|save|load|audit]"}};
  for (const auto& [name, help] : commands)
    add_common(app.add_subcommand(name, help), flags, name == "games" || name == "instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto config = build_config(command, flags);
    const auto report = osslab::harness::run(config);
    const std::string text = osslab::harness::render(report.to_json());
    if (flags.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(flags.out, std::ios::binary);
      out << text;
      if (!out) throw osslab::ParameterError("cannot write " + flags.out);
    }
    return report.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "osslab " << command << ": " << e.what() << "\n";
    return 2;
  }
}
