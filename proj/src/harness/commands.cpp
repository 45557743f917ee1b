#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>

#include "osslab/audit.hpp"
#include "osslab/games.hpp"
#include "osslab/harness.hpp"
#include "osslab/keyfire.hpp"
#include "osslab/parallel.hpp"
#include "osslab/persistence.hpp"

namespace osslab::harness {

namespace {

using oracles::AnyInstance;
using oracles::KeyFireInstance;
using oracles::OssInstance;

// Sub-stream ids for derive_seed. Each command draws from its own streams so
// that adding a stage to one command never shifts another's randomness.
enum Stream : std::uint64_t {
  kOssTrial = 1,
  kGoodInstance = 2,
  kZeta = 3,
  kCopy = 4,
  kGame = 5,
  kInstanceGen = 6,
};

double threshold(const ExperimentConfig& c, const char* name, double fallback) {
  const auto it = c.thresholds.find(name);
  return it == c.thresholds.end() ? fallback : it->get<double>();
}

int trials_or(const ExperimentConfig& c, int fallback) {
  return c.trials > 0 ? c.trials : fallback;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::optional<AnyInstance> load_configured(const ExperimentConfig& c) {
  if (!c.instance_path) return std::nullopt;
  return oracles::load_instance(*c.instance_path);
}

OssInstance oss_part(const AnyInstance& any) {
  if (const auto* kf = std::get_if<KeyFireInstance>(&any)) return kf->oss();
  return std::get<OssInstance>(any);
}

json params_json(const oracles::KeyFireParams& p) {
  return {{"n", p.oss.n}, {"r", p.oss.r}, {"k", p.oss.k}, {"att", p.att},
          {"sig", p.sig}, {"nu", p.nu},   {"jmax", p.jmax}};
}

/// The key-fire instance for clone and end-to-end runs: from the file, or
/// the first all-good draw from the seed.
KeyFireInstance keyfire_instance(const ExperimentConfig& c, json& aggregate) {
  if (auto any = load_configured(c)) {
    const auto* kf = std::get_if<KeyFireInstance>(&*any);
    if (kf == nullptr) throw ParameterError("instance file holds an OSS instance, not key-fire");
    kf->params().validate();
    aggregate["instance"] = {{"source", "file"}, {"digest", hex(kf->table_digest())}};
    return *kf;
  }
  Rng rng(derive_seed(c.seed, kGoodInstance));
  auto good = keyfire::find_good_instance(c.params, rng);
  aggregate["instance"] = {{"source", "seed"},
                           {"rejected_draws", good.rejected},
                           {"digest", hex(good.instance.table_digest())}};
  return good.instance;
}

oss::SignMode sign_mode(const ExperimentConfig& c) {
  return c.exact_sign ? oss::SignMode::ExactSurrogate : oss::SignMode::Grover;
}

}  // namespace

// ---------------------------------------------------------------------------
// oss-correctness

ExperimentReport cmd_oss_correctness(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  const auto file = load_configured(config);
  const std::optional<OssInstance> fixed =
      file ? std::optional<OssInstance>(oss_part(*file)) : std::nullopt;
  const oracles::OssParams p = fixed ? fixed->params() : config.params.oss;
  const int jmax = config.params.jmax;
  const int trials = trials_or(config, 500);

  struct Record {
    std::uint64_t vk = 0;
    bool good = false;
    bool m = false;
    bool signed_ok = false;
    int iteration = -1;
    bool verified = false;
  };
  std::vector<Record> records(static_cast<std::size_t>(trials));
  parallel_for(records.size(), config.threads, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, kOssTrial, t));
    const OssInstance inst = fixed ? *fixed : oracles::gen_oss_oracles(p, rng);
    auto key = oss::gen_qkey(inst, rng);
    Record r;
    r.vk = key.vk;
    r.good = inst.is_good_key(key.vk);
    r.m = rng.coin();
    const auto outcome = oss::sign_detailed(inst, std::move(key), r.m, jmax, rng);
    r.signed_ok = outcome.signature.has_value();
    r.iteration = outcome.success_iteration;
    r.verified = r.signed_ok && oss::verify(inst, r.vk, r.m, *outcome.signature);
    records[t] = r;
  });

  int good = 0, good_ok = 0, bad = 0, bad_ok = 0, verify_failures = 0;
  for (std::size_t t = 0; t < records.size(); ++t) {
    const auto& r = records[t];
    report.trials.push_back({{"trial", t},
                             {"vk", r.vk},
                             {"good_vk", r.good},
                             {"message", r.m ? 1 : 0},
                             {"signed", r.signed_ok},
                             {"success_iteration", r.iteration},
                             {"verified", r.verified}});
    (r.good ? good : bad) += 1;
    if (r.signed_ok) (r.good ? good_ok : bad_ok) += 1;
    if (r.signed_ok && !r.verified) ++verify_failures;
  }
  const double expected = 1 - std::ldexp(1.0, -jmax);
  const double rate = good > 0 ? static_cast<double>(good_ok) / good : 0;
  const double sigma = good > 0 ? std::sqrt(expected * (1 - expected) / good) : 0;
  const double sigmas = threshold(config, "sigmas", 3);
  report.aggregate = {{"params", {{"n", p.n}, {"r", p.r}, {"k", p.k}, {"jmax", jmax}}},
                      {"good_trials", good},
                      {"good_successes", good_ok},
                      {"good_success_rate", rate},
                      {"expected_good_success_rate", expected},
                      {"sigma", sigma},
                      {"bad_trials", bad},
                      {"bad_successes", bad_ok},
                      {"bad_success_rate", bad > 0 ? static_cast<double>(bad_ok) / bad : 0.0},
                      {"verify_failures", verify_failures}};
  if (file) report.aggregate["instance_digest"] = hex(fixed->table_digest());

  report.check("good_trials", good, ">=", 1);
  report.check("good_success_rate", rate, ">=", expected - sigmas * sigma);
  report.check("good_success_deviation", std::abs(rate - expected), "<=", sigmas * sigma);
  report.check("verify_failures", verify_failures, "==", 0);
  return report;
}

// ---------------------------------------------------------------------------
// clone-fidelity

ExperimentReport cmd_clone_fidelity(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  const KeyFireInstance inst = keyfire_instance(config, report.aggregate);
  const auto& kp = inst.params();
  const auto mode = sign_mode(config);
  const double budget = keyfire::clone_budget(kp);
  report.aggregate["params"] = params_json(kp);
  report.aggregate["budget"] = budget;
  report.aggregate["mode"] = config.exact_sign ? "exact-surrogate" : "grover";

  const auto flame = oss::gen_qkey_purified(inst.oss());
  const auto clone = keyfire::kf_clone(inst, flame, mode);
  report.aggregate["clone"] = {{"fidelity", clone.fidelity},
                               {"ancilla_zero_weight", clone.ancilla_zero_weight},
                               {"source_fidelity", clone.source_fidelity},
                               {"clone_fidelity", clone.clone_fidelity},
                               {"support", clone.state.support_size()},
                               {"register_bits", kp.clone_register_width()}};
  const double min_fidelity =
      threshold(config, "min_fidelity", config.exact_sign ? 1 - 1e-8 : 1 - budget);
  report.check("clone_fidelity", clone.fidelity, ">=", min_fidelity);

  if (config.chain_depth > 0) {
    const auto chain = keyfire::clone_chain(inst, config.chain_depth, mode);
    report.aggregate["chain"] = {{"depth", config.chain_depth},
                                 {"copy_fidelity", chain.copy_fidelity},
                                 {"ancilla_zero", chain.ancilla_zero},
                                 {"joint_lower_bound", chain.joint_lower_bound},
                                 {"threshold", chain.threshold}};
    report.check("chain_joint_lower_bound", chain.joint_lower_bound, ">=",
                 threshold(config, "chain_threshold", chain.threshold));
  }

  const int zetas = config.trials > 0 ? config.trials : config.zeta_count;
  if (zetas > 0) {
    // Each worker owns a checker (its slice cache) and takes every
    // workers-th zeta, so the assignment is fixed by the thread count and
    // the values do not depend on it at all.
    std::vector<keyfire::IterationCheck> results(static_cast<std::size_t>(zetas));
    std::vector<int> supports(results.size());
    const auto workers = static_cast<std::size_t>(std::min(config.threads, zetas));
    parallel_for(workers, config.threads, [&](std::size_t w) {
      keyfire::CloneIterationChecker checker(inst, mode);
      for (std::size_t j = w; j < results.size(); j += workers) {
        Rng rng(derive_seed(config.seed, kZeta, j));
        const auto zeta = keyfire::random_workspace_state(kp.oss, config.zeta_support, rng);
        supports[j] = static_cast<int>(zeta.support_size());
        results[j] = checker.check(zeta, static_cast<int>(j % oss::kGenQKeyQueries));
      }
    });
    double worst = 0;
    for (std::size_t j = 0; j < results.size(); ++j) {
      worst = std::max(worst, results[j].deficit);
      report.trials.push_back({{"zeta", j},
                               {"round", static_cast<int>(j % oss::kGenQKeyQueries)},
                               {"support", supports[j]},
                               {"overlap_squared", results[j].overlap_squared},
                               {"deficit", results[j].deficit}});
    }
    const double bound = config.exact_sign ? 1e-9 : 6 * std::ldexp(1.0, -kp.jmax) + 1e-8;
    report.aggregate["iteration"] = {{"zetas", zetas}, {"max_deficit", worst}, {"bound", bound}};
    report.check("iteration_max_deficit", worst, "<=",
                 threshold(config, "max_iteration_deficit", bound));
  }
  return report;
}

// ---------------------------------------------------------------------------
// keyfire-endtoend

ExperimentReport cmd_keyfire_endtoend(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  const KeyFireInstance inst = keyfire_instance(config, report.aggregate);
  const auto& kp = inst.params();
  const auto mode = sign_mode(config);
  report.aggregate["params"] = params_json(kp);
  report.aggregate["mode"] = config.exact_sign ? "exact-surrogate" : "grover";

  const auto flame = oss::gen_qkey_purified(inst.oss());
  const auto clone = keyfire::kf_clone(inst, flame, mode);
  report.aggregate["clone_fidelity"] = clone.fidelity;

  // Every message when there are at most 2^10 of them, else a sample.
  const std::uint64_t space = std::uint64_t{1} << kp.nu;
  const bool exhaustive = kp.nu <= 10;
  const std::uint64_t per_copy =
      exhaustive ? space : static_cast<std::uint64_t>(trials_or(config, 256));
  const std::vector<std::string> copies{keyfire::kFlamePrefix, keyfire::kClonePrefix};

  struct Record {
    std::uint64_t m = 0;
    std::uint64_t ivk = 0;
    bool good = false;
    std::optional<std::uint64_t> sig;
    bool matches = false;
    bool verified = false;
    int tampers_accepted = 0;
  };
  std::vector<Record> records(copies.size() * per_copy);
  parallel_for(records.size(), config.threads, [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, kCopy, i));
    const std::string& prefix = copies[i / per_copy];
    Record r;
    r.m = exhaustive ? i % per_copy : rng.bits(kp.nu);
    auto copy = keyfire::take_copy(clone.state, kp.oss, prefix, rng);
    const auto out = keyfire::kf_sign(inst, copy, r.m, rng, "", mode);
    r.ivk = out.attestation.ivk;
    r.good = inst.oss().is_good_key(r.ivk);
    r.sig = out.signature;
    if (r.sig) {
      r.matches = *r.sig == inst.Hsig()(r.m);
      r.verified = keyfire::kf_verify(inst, r.m, *r.sig);
      for (int b = 0; b < kp.sig; ++b)
        r.tampers_accepted += keyfire::kf_verify(inst, r.m, *r.sig ^ (std::uint64_t{1} << b)) ? 1 : 0;
    }
    records[i] = r;
  });

  int good = 0, signed_good = 0, mismatches = 0, rejected = 0, tampers = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    json rec = {{"copy", copies[i / per_copy]},
                {"message", r.m},
                {"ivk", r.ivk},
                {"good_vk", r.good},
                {"signed", r.sig.has_value()},
                {"matches_hsig", r.matches},
                {"verified", r.verified},
                {"tampers_accepted", r.tampers_accepted}};
    rec["signature"] = r.sig ? json(*r.sig) : json(nullptr);
    report.trials.push_back(rec);
    tampers += r.tampers_accepted;
    if (!r.good) continue;
    ++good;
    if (!r.sig) continue;
    ++signed_good;
    mismatches += r.matches ? 0 : 1;
    rejected += r.verified ? 0 : 1;
  }
  const double signed_fraction = good > 0 ? static_cast<double>(signed_good) / good : 0;
  report.aggregate["messages_per_copy"] = per_copy;
  report.aggregate["exhaustive"] = exhaustive;
  report.aggregate["good_branches"] = good;
  report.aggregate["signed_on_good"] = signed_good;
  report.aggregate["signed_fraction"] = signed_fraction;
  report.aggregate["hsig_mismatches"] = mismatches;
  report.aggregate["honest_rejected"] = rejected;
  report.aggregate["tampers_accepted"] = tampers;

  report.check("hsig_mismatches", mismatches, "==", 0);
  report.check("honest_rejected", rejected, "==", 0);
  report.check("tampers_accepted", tampers, "==", 0);
  report.check("signed_fraction", signed_fraction, ">=",
               threshold(config, "min_signed_fraction", config.exact_sign ? 1.0 : 0.9));
  return report;
}

// ---------------------------------------------------------------------------
// games

namespace {

constexpr int kForwarderQ = 3;
constexpr int kRomForwarderS = 8;

games::QueryProgram single_query_program(const std::string& name, int width,
                                         std::optional<std::uint64_t> classical_input) {
  sim::RegisterLayout layout;
  layout.add("x", width).add("out", 1);
  auto parity = oracles::make_oracle("parity", width, 1, [](std::uint64_t x) {
    return static_cast<std::uint64_t>(__builtin_popcountll(x) & 1);
  });
  games::QueryProgram prog{name, sim::init_state(layout), {}, {{parity, {"x"}, "out"}}, 1};
  if (classical_input) prog.initial.apply_x("x", *classical_input);
  else prog.before = {{sim::ops::hadamard("x")}};
  return prog;
}

json game_trials_json(const std::string& game, const games::GameReport& r) {
  json out = json::array();
  for (std::size_t t = 0; t < r.trials.size(); ++t) {
    const auto& g = r.trials[t];
    out.push_back({{"game", game},
                   {"script", r.script},
                   {"trial", t},
                   {"stage1_queries", g.stage1_queries},
                   {"bound", g.bound},
                   {"outputs", g.outputs},
                   {"valid_outputs", g.valid_outputs},
                   {"distinct_valid", g.distinct_valid},
                   {"valid_inside_predicates", g.valid_inside_predicates},
                   {"stage2_queries", g.stage2_queries},
                   {"violation", g.violation},
                   {"violation_message", g.violation_message}});
  }
  return out;
}

json game_summary(const games::GameReport& r) {
  return {{"script", r.script},
          {"trials", r.trials.size()},
          {"violations", r.violations},
          {"max_distinct_valid", r.max_distinct_valid},
          {"within_bound", r.within_bound},
          {"valid_rate", r.valid_rate},
          {"mean_valid_per_trial", r.mean_valid_per_trial}};
}

void append_trials(json& into, const json& more) {
  for (const auto& t : more) into.push_back(t);
}

int count_if_trials(const games::GameReport& r, bool (*pred)(const games::GameTrial&)) {
  int n = 0;
  for (const auto& t : r.trials) n += pred(t) ? 1 : 0;
  return n;
}

}  // namespace

ExperimentReport cmd_games(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  const std::string which = config.action.empty() ? "all" : config.action;
  auto wants = [&](const char* name) { return which == "all" || which == name; };
  const auto file = load_configured(config);
  const OssInstance inst = file ? oss_part(*file) : [&] {
    Rng rng(derive_seed(config.seed, kGame, 0));
    return oracles::gen_oss_oracles(config.params.oss, rng);
  }();
  const int jmax = config.params.jmax;
  const int threads = config.threads;
  auto game_rng = [&](std::uint64_t id) { return Rng(derive_seed(config.seed, kGame, id)); };

  if (wants("oneshot-structural")) {
    const auto r = games::oneshot_structure(inst);
    report.aggregate["oneshot_structural"] = {{"keys", r.keys},
                                              {"good_keys", r.good_keys},
                                              {"overlapping_keys", r.overlapping_keys}};
    report.check("oneshot_overlapping_keys", static_cast<double>(r.overlapping_keys), "==", 0);
  }

  if (wants("oss-incompressibility")) {
    const int trials = trials_or(config, 20);
    const int q = kForwarderQ;
    Rng r1 = game_rng(1), r2 = game_rng(2), r3 = game_rng(3);
    const auto honest =
        games::run_oss_incompressibility(inst, games::scripts::honest_forwarder(q, jmax), trials, r1, threads);
    const auto guesser =
        games::run_oss_incompressibility(inst, games::scripts::oss_guesser(16), trials, r2, threads);
    const auto violator = games::run_oss_incompressibility(
        inst, games::scripts::oss_dispatch_violator(), trials, r3, threads);
    append_trials(report.trials, game_trials_json("oss-incompressibility", honest));
    append_trials(report.trials, game_trials_json("oss-incompressibility", guesser));
    append_trials(report.trials, game_trials_json("oss-incompressibility", violator));
    const auto& p = inst.params();
    const double expected_rate = std::ldexp(1.0, p.n - p.r - 1) / std::ldexp(1.0, p.k);
    report.aggregate["oss_incompressibility"] = {
        {"forwarder_q", q},
        {"honest", game_summary(honest)},
        {"guesser", game_summary(guesser)},
        {"guesser_expected_rate", expected_rate},
        {"violator", game_summary(violator)},
        {"note", "distinct_valid is the realized set of valid keys, a lower-bound witness "
                 "for any incompressibility list"}};
    const int exact = count_if_trials(honest, [](const games::GameTrial& t) {
      return !t.violation && t.distinct_valid == kForwarderQ && t.distinct_valid <= t.bound;
    });
    report.check("oss_forwarder_trials_with_count_q", exact, "==", trials);
    report.check("oss_honest_violations", honest.violations, "==", 0);
    report.check("oss_violations_detected", violator.violations, "==", trials);
  }

  if (wants("rom-incompressibility")) {
    const int trials = trials_or(config, 20);
    const int s = kRomForwarderS;
    Rng r1 = game_rng(11), r2 = game_rng(12), r3 = game_rng(13), r4 = game_rng(14);
    const auto forwarder =
        games::run_rom_incompressibility(8, 8, games::scripts::rom_forwarder(s), trials, r1, threads);
    const auto guesser =
        games::run_rom_incompressibility(8, 4, games::scripts::rom_guesser(8), trials, r2, threads);
    const auto section =
        games::run_rom_incompressibility(8, 8, games::scripts::rom_section_reader(5), trials, r3, threads);
    const auto violator =
        games::run_rom_incompressibility(8, 8, games::scripts::rom_violator(), trials, r4, threads);
    for (const auto* g : {&forwarder, &guesser, &section, &violator})
      append_trials(report.trials, game_trials_json("rom-incompressibility", *g));
    report.aggregate["rom_incompressibility"] = {
        {"forwarder_s", s},
        {"forwarder", game_summary(forwarder)},
        {"guesser", game_summary(guesser)},
        {"guesser_expected_mean", 8 * std::ldexp(1.0, -4)},
        {"guesser_bound_term", 8 / std::sqrt(std::ldexp(1.0, 4))},
        {"section_reader", game_summary(section)},
        {"violator", game_summary(violator)}};
    const int exact = count_if_trials(forwarder, [](const games::GameTrial& t) {
      return !t.violation && t.distinct_valid == kRomForwarderS && t.bound == kRomForwarderS;
    });
    const int excluded = count_if_trials(section, [](const games::GameTrial& t) {
      return !t.violation && t.distinct_valid == 0 && t.valid_inside_predicates == 5;
    });
    report.check("rom_forwarder_trials_with_count_s", exact, "==", trials);
    report.check("rom_section_pairs_excluded", excluded, "==", trials);
    report.check("rom_violations_detected", violator.violations, "==", trials);
  }

  if (wants("subspace-stats")) {
    const int trials = trials_or(config, 100000);
    const double sigmas = threshold(config, "sigmas", 3);
    json rows = json::array();
    std::uint64_t id = 21;
    for (auto [d1, d2, ambient] : {std::array{2, 1, 4}, std::array{4, 2, 6}}) {
      Rng rng = game_rng(id++);
      const auto r = games::subspace_stats(d1, d2, ambient, trials, rng, threads);
      const auto exact = games::subspace_exact(d1, d2, 5);
      auto stat = [](const games::FrequencyStat& f) {
        return json{{"hits", f.hits},
                    {"trials", f.trials},
                    {"frequency", f.frequency()},
                    {"expected", f.expected},
                    {"sigma", f.sigma()}};
      };
      rows.push_back({{"d1", d1},
                      {"d2", d2},
                      {"ambient", ambient},
                      {"contains", stat(r.contains)},
                      {"oblivious", stat(r.oblivious)},
                      {"exact_at_ambient_5", {{"contains", exact.contains},
                                              {"oblivious", exact.oblivious}}}});
      const std::string tag = "subspace_" + std::to_string(d1) + "_" + std::to_string(d2);
      report.check(tag + "_contains_deviation", std::abs(r.contains.frequency() - r.contains.expected),
                   "<=", sigmas * r.contains.sigma());
      report.check(tag + "_oblivious_deviation",
                   std::abs(r.oblivious.frequency() - r.oblivious.expected), "<=",
                   sigmas * r.oblivious.sigma());
    }
    report.aggregate["subspace_stats"] = rows;
  }

  if (wants("query-weight")) {
    const int samples = trials_or(config, 10000);
    const games::Predicate all{"all inputs", [](std::uint64_t) { return true; }};
    const games::Predicate none{"no input", [](std::uint64_t) { return false; }};
    Rng r1 = game_rng(31), r2 = game_rng(32), r3 = game_rng(33);
    const auto classical =
        games::estimate_query_weight(single_query_program("classical", 3, 5), all, samples, r1);
    const auto uniform =
        games::estimate_query_weight(single_query_program("uniform", 2, std::nullopt), all, samples, r2);
    const auto empty = games::estimate_query_weight(single_query_program("uniform", 2, std::nullopt),
                                                    none, samples, r3);
    auto weights = [](const games::QueryWeightReport& r) {
      json w = json::object();
      for (const auto& [x, v] : r.weights) w[std::to_string(x)] = v;
      return json{{"predicate", r.predicate}, {"samples", r.samples}, {"weights", w},
                  {"total", r.total},         {"sigma", r.sigma}};
    };
    report.aggregate["query_weight"] = {{"classical_x5", weights(classical)},
                                        {"uniform_4", weights(uniform)},
                                        {"never", weights(empty)}};
    report.check("qw_classical_weight", classical.weights.count(5) ? classical.weights.at(5) : 0,
                 "==", 1);
    double worst = 0;
    for (std::uint64_t x = 0; x < 4; ++x) {
      const double w = uniform.weights.count(x) ? uniform.weights.at(x) : 0;
      worst = std::max(worst, std::abs(w - 0.25));
    }
    report.check("qw_uniform_max_deviation", worst, "<=",
                 threshold(config, "sigmas", 3) * std::sqrt(0.25 * 0.75 / samples));
    report.check("qw_never_total", empty.total, "==", 0);
  }
  return report;
}

// ---------------------------------------------------------------------------
// instance

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void audit_into(ExperimentReport& report, const AnyInstance& any) {
  const auto oss_audit = oracles::audit_oss(oss_part(any));
  report.aggregate["audit_oss"] = {{"checks", oss_audit.checks},
                                   {"failures", oss_audit.failures},
                                   {"first_failure", oss_audit.first_failure}};
  report.check("audit_oss_failures", static_cast<double>(oss_audit.failures), "==", 0);
  if (const auto* kf = std::get_if<KeyFireInstance>(&any)) {
    const auto kf_audit = oracles::audit_keyfire(*kf);
    report.aggregate["audit_keyfire"] = {{"checks", kf_audit.checks},
                                         {"failures", kf_audit.failures},
                                         {"first_failure", kf_audit.first_failure}};
    report.check("audit_keyfire_failures", static_cast<double>(kf_audit.failures), "==", 0);
  }
}

std::uint64_t digest_of(const AnyInstance& any) {
  return std::visit([](const auto& inst) { return inst.table_digest(); }, any);
}

}  // namespace

ExperimentReport cmd_instance(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  const std::string action = config.action.empty() ? "roundtrip" : config.action;
  auto generate = [&] {
    Rng rng(derive_seed(config.seed, kInstanceGen));
    return AnyInstance(oracles::gen_keyfire_oracles(config.params, rng));
  };

  if (action == "load" || (action == "audit" && config.instance_path)) {
    const AnyInstance any = oracles::load_instance(*config.instance_path);
    report.aggregate["digest"] = hex(digest_of(any));
    report.aggregate["kind"] = std::holds_alternative<KeyFireInstance>(any) ? "keyfire" : "oss";
    if (action == "audit") audit_into(report, any);
    return report;
  }
  if (action == "audit") {
    const AnyInstance any = generate();
    report.aggregate["digest"] = hex(digest_of(any));
    audit_into(report, any);
    return report;
  }

  const AnyInstance any = generate();
  const auto bytes = oracles::serialize_instance(any);
  report.aggregate["digest"] = hex(digest_of(any));
  report.aggregate["bytes"] = bytes.size();
  // save and roundtrip both write the file twice and compare.
  const std::filesystem::path path =
      config.instance_path ? std::filesystem::path(*config.instance_path)
                           : std::filesystem::temp_directory_path() /
                                 ("osslab-instance-" + hex(config.seed) + ".bin");
  oracles::save_instance(any, path);
  const auto first = read_bytes(path);
  oracles::save_instance(any, path);
  const auto second = read_bytes(path);
  report.check("double_save_identical", first == second && first == bytes ? 1 : 0, "==", 1);
  if (action == "roundtrip") {
    const AnyInstance loaded = oracles::load_instance(path);
    report.check("loaded_digest_matches", digest_of(loaded) == digest_of(any) ? 1 : 0, "==", 1);
    audit_into(report, loaded);
    if (!config.instance_path) std::filesystem::remove(path);
  }
  report.aggregate["path"] = config.instance_path ? json(path.string()) : json(nullptr);
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport run(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  if (config.experiment == "oss-correctness") report = cmd_oss_correctness(config);
  else if (config.experiment == "clone-fidelity") report = cmd_clone_fidelity(config);
  else if (config.experiment == "keyfire-endtoend") report = cmd_keyfire_endtoend(config);
  else if (config.experiment == "games") report = cmd_games(config);
  else report = cmd_instance(config);
  if (config.timing)
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace osslab::harness
