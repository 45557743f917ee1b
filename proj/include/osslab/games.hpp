#pragma once

// Security-game machinery that runs at desk scale: query-weight estimation,
// the OSS and random-oracle incompressibility games with scripted
// adversaries, and subspace-hiding statistics.
//
// The game runners hand each stage an access object and route every oracle
// call through it. That is where queries are counted and where stage 2's
// restrictions are enforced. A call outside the allowed set throws
// RestrictionViolation, and the runner turns that into a violation record
// for the trial.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osslab/oss.hpp"

namespace osslab::games {

struct Predicate {
  std::string description;
  std::function<bool(std::uint64_t)> test;

  bool operator()(std::uint64_t x) const { return test(x); }
};

// ---------------------------------------------------------------------------
// Query weight

/// A quantum program with a fixed number of oracle queries. Query i applies
/// `queries[i]` after the operations in `before[i]`.
struct QueryProgram {
  std::string name;
  sim::SparseState initial;
  std::vector<std::vector<sim::Operation>> before;
  std::vector<sim::OracleBinding> queries;
  int declared_queries = 0;
};

struct QueryWeightReport {
  std::string predicate;
  int samples = 0;
  int declared_queries = 0;
  /// Estimated weight of each sampled input that satisfies the predicate.
  std::map<std::uint64_t, double> weights;
  /// Sum of `weights`, the estimate of the predicate's total query weight.
  double total = 0;
  /// Binomial standard error of `total`.
  double sigma = 0;
};

/// Picks a query index uniformly, measures that query's input registers
/// right before it and keeps the outcome if it satisfies the predicate.
/// Estimates are frequency times the query count. The pre-query states are
/// computed once, and each sample then draws from their distribution, which
/// is the same as rerunning the program. Throws ParameterError when the
/// program makes more queries than it declares.
QueryWeightReport estimate_query_weight(const QueryProgram& program, const Predicate& predicate,
                                        int samples, Rng& rng);

// ---------------------------------------------------------------------------
// Incompressibility games

using Leakage = std::vector<std::uint64_t>;

enum class Stage { One, Two };

/// Oracle access for the OSS game. Stage 1 sees everything. Stage 2 may
/// only sign (the D oracle) and verify (D0).
class OssAccess {
 public:
  OssAccess(const oracles::OssInstance& inst, Stage stage, int dispatch_budget);

  const oracles::OssParams& params() const;
  Stage stage() const { return stage_; }

  /// One GenQKey dispatch query.
  std::uint64_t dispatch(std::uint64_t input);
  /// Purified key generation plus a vk measurement: kGenQKeyQueries
  /// dispatch queries.
  oss::OssKey gen_qkey(Rng& rng);
  /// Measured signing loop on a key, through the D oracle.
  std::optional<std::uint64_t> sign(oss::OssKey key, bool m, int jmax, Rng& rng);
  bool D(std::uint64_t y, std::uint64_t v);
  bool D0(std::uint64_t y, bool m, std::uint64_t v);

  int dispatch_queries() const { return dispatch_queries_; }
  int sign_queries() const { return sign_queries_; }
  int verify_queries() const { return verify_queries_; }

 private:
  void charge_dispatch(int count);

  const oracles::OssInstance* inst_;
  Stage stage_;
  int dispatch_budget_;
  int dispatch_queries_ = 0;
  int sign_queries_ = 0;
  int verify_queries_ = 0;
};

struct OssOutput {
  std::uint64_t vk = 0;
  bool m = false;
  std::uint64_t sig = 0;
};

/// Oracle access for the random-oracle game. Stage 1 runs in rounds: each
/// round makes H queries, may ask the section oracle of the predicates
/// declared so far, and closes by declaring a new predicate. Stage 2 may
/// only use the image verification oracle and the section oracle of the
/// union of all predicates.
class RomAccess {
 public:
  RomAccess(const oracles::RandomFunction& h, Stage stage, int query_budget,
            std::vector<Predicate> predicates = {});

  int in_width() const;
  int out_width() const;
  Stage stage() const { return stage_; }

  std::uint64_t H(std::uint64_t x);
  /// H(x) when x satisfies a declared predicate, empty otherwise.
  std::optional<std::uint64_t> section(std::uint64_t x);
  bool verify(std::uint64_t x, std::uint64_t y);
  /// Ends the current stage-1 round with predicate `p`.
  void declare(Predicate p);

  /// H queries per round; the round still open is last.
  const std::vector<int>& round_queries() const { return round_queries_; }
  int total_queries() const;
  int verify_queries() const { return verify_queries_; }
  int section_queries() const { return section_queries_; }
  const std::vector<Predicate>& predicates() const { return predicates_; }
  bool in_union(std::uint64_t x) const;

 private:
  const oracles::RandomFunction* h_;
  Stage stage_;
  int query_budget_;
  std::vector<Predicate> predicates_;
  std::vector<int> round_queries_{0};
  int verify_queries_ = 0;
  int section_queries_ = 0;
};

struct RomOutput {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
};

/// A two-stage adversary. Stage 1 emits the classical leakage, stage 2
/// consumes it and emits a list of outputs. Both must be deterministic
/// given their rng. `query_budget` caps stage 1's counted queries.
template <class Access, class Output>
struct AdversaryScript {
  std::string name;
  int query_budget = 0;
  std::function<Leakage(Access&, Rng&)> stage1;
  std::function<std::vector<Output>(Access&, const Leakage&, Rng&)> stage2;
};

using OssScript = AdversaryScript<OssAccess, OssOutput>;
using RomScript = AdversaryScript<RomAccess, RomOutput>;

struct GameTrial {
  /// Counted stage-1 queries: dispatch queries (OSS) or H queries (ROM).
  int stage1_queries = 0;
  /// List bound to compare against: 2 * stage1_queries for OSS, the sum of
  /// the per-round H queries for ROM.
  int bound = 0;
  int outputs = 0;
  int valid_outputs = 0;
  /// Distinct vk (OSS) or distinct x outside the predicate union (ROM)
  /// among valid outputs. This is the realized set, a lower-bound witness
  /// for any incompressibility list, not the list itself.
  int distinct_valid = 0;
  /// ROM only: valid pairs whose x lies inside the predicate union.
  int valid_inside_predicates = 0;
  int stage2_queries = 0;
  bool violation = false;
  std::string violation_message;
};

struct GameReport {
  std::string script;
  std::vector<GameTrial> trials;
  int violations = 0;
  int max_distinct_valid = 0;
  /// Every non-violating trial kept distinct_valid <= bound.
  bool within_bound = true;
  /// valid_outputs / outputs over all trials (0 when nothing was output).
  double valid_rate = 0;
  double mean_valid_per_trial = 0;
};

/// Trial t draws its stage seeds from derive_seed(master, ., t), where
/// master is one draw from rng, so results do not depend on `threads`.
GameReport run_oss_incompressibility(const oracles::OssInstance& inst, const OssScript& script,
                                     int trials, Rng& rng, int threads = 1);

/// A fresh random function {0,1}^g1 -> {0,1}^g2 per trial.
GameReport run_rom_incompressibility(int g1, int g2, const RomScript& script, int trials,
                                     Rng& rng, int threads = 1);

namespace scripts {

/// Stage 1 runs gen_qkey and signs m = 0 until it holds `q` distinct vk
/// with a signature, skipping repeated vk and failed signings, and leaks
/// (vk, sig) pairs. Stage 2 outputs them.
OssScript honest_forwarder(int q, int jmax, int dispatch_budget = 1000);
/// No leakage. Stage 2 outputs `guesses` uniform (vk, m, v) triples.
OssScript oss_guesser(int guesses);
/// Stage 2 tries a dispatch query, which the game forbids.
OssScript oss_dispatch_violator();

/// Stage 1 queries H on x = 0..s-1 and leaks the pairs.
RomScript rom_forwarder(int s);
/// No leakage. Stage 2 makes `q` verification queries on uniform (x, y)
/// with distinct x and outputs the pairs that verify.
RomScript rom_guesser(int q);
/// Stage 1 declares the predicate x < count without querying H. Stage 2
/// reads those x through the section oracle and outputs the pairs.
RomScript rom_section_reader(int count);
/// Stage 2 tries a plain H query.
RomScript rom_violator();

}  // namespace scripts

// ---------------------------------------------------------------------------
// Subspace statistics

struct FrequencyStat {
  int trials = 0;
  int hits = 0;
  double expected = 0;

  double frequency() const;
  /// Binomial standard deviation of the frequency under `expected`.
  double sigma() const;
  /// |frequency - expected| <= 3 sigma (exact match when sigma is 0).
  bool within_3sigma() const;
};

struct SubspaceReport {
  int d1 = 0;
  int d2 = 0;
  int ambient = 0;
  /// Fixed nonzero v in S: how often v lands in T.
  /// Expected (2^d2 - 1) / (2^d1 - 1).
  FrequencyStat contains;
  /// v drawn outside S^perp without looking at T: how often v is in
  /// T^perp (and so in T^perp \ S^perp).
  /// Expected p = (2^(d1-d2) - 1) / (2^d1 - 1).
  FrequencyStat oblivious;
};

/// Each trial draws S of dimension d1 in GF(2)^ambient and T of dimension
/// d2 inside S, both uniformly. Throws ParameterError unless
/// 0 <= d2 <= d1 <= ambient <= 12 and d1 >= 1.
SubspaceReport subspace_stats(int d1, int d2, int ambient, int trials, Rng& rng,
                              int threads = 1);

/// The two expected frequencies computed by enumerating every d2-dimensional
/// subspace of one S and every v outside S^perp. Requires d1 <= 6.
struct SubspaceExact {
  double contains = 0;
  double oblivious = 0;
};
SubspaceExact subspace_exact(int d1, int d2, int ambient);

double expected_contains(int d1, int d2);
double expected_oblivious(int d1, int d2);

// ---------------------------------------------------------------------------
// One-shot structure

struct OneShotStructure {
  std::uint64_t keys = 0;
  /// vk whose message-0 and message-1 signature sets intersect.
  std::uint64_t overlapping_keys = 0;
  std::uint64_t good_keys = 0;
  bool ok() const { return overlapping_keys == 0; }
};

/// Checks over every vk that no signature is valid for both messages.
OneShotStructure oneshot_structure(const oracles::OssInstance& inst);

}  // namespace osslab::games
