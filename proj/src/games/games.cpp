#include "osslab/games.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "osslab/parallel.hpp"

namespace osslab::games {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ParameterError(what);
}

std::uint64_t sample_outcome(const std::vector<std::pair<std::uint64_t, double>>& dist,
                             Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0;
  for (const auto& [value, p] : dist) {
    acc += p;
    if (u < acc) return value;
  }
  // Rounding can leave the total a hair under 1.
  return dist.back().first;
}

}  // namespace

// ---------------------------------------------------------------------------
// Query weight

QueryWeightReport estimate_query_weight(const QueryProgram& program, const Predicate& predicate,
                                        int samples, Rng& rng) {
  require(samples > 0, "estimate_query_weight: samples must be positive");
  require(program.declared_queries > 0, "estimate_query_weight: program declares no queries");
  if (program.queries.size() > static_cast<std::size_t>(program.declared_queries))
    throw ParameterError("estimate_query_weight: program '" + program.name + "' makes " +
                         std::to_string(program.queries.size()) + " queries but declares " +
                         std::to_string(program.declared_queries));
  require(program.before.size() <= program.queries.size(),
          "estimate_query_weight: more operation blocks than queries");

  std::vector<std::vector<std::pair<std::uint64_t, double>>> pre_query;
  sim::SparseState state = program.initial;
  for (std::size_t i = 0; i < program.queries.size(); ++i) {
    if (i < program.before.size()) state.apply(program.before[i]);
    pre_query.push_back(state.distribution(program.queries[i].inputs));
    state.apply_oracle_xor(program.queries[i]);
  }

  // A declared query the program never makes has an empty input register
  // and contributes nothing.
  const auto q = static_cast<std::uint64_t>(program.declared_queries);
  std::map<std::uint64_t, int> counts;
  int hits = 0;
  for (int s = 0; s < samples; ++s) {
    const auto ind = rng.below(q);
    if (ind >= pre_query.size()) continue;
    const std::uint64_t x = sample_outcome(pre_query[ind], rng);
    if (!predicate(x)) continue;
    ++counts[x];
    ++hits;
  }

  QueryWeightReport report;
  report.predicate = predicate.description;
  report.samples = samples;
  report.declared_queries = program.declared_queries;
  const double scale = static_cast<double>(q) / samples;
  for (const auto& [x, c] : counts) report.weights[x] = scale * c;
  const double f = static_cast<double>(hits) / samples;
  report.total = static_cast<double>(q) * f;
  report.sigma = static_cast<double>(q) * std::sqrt(f * (1 - f) / samples);
  return report;
}

// ---------------------------------------------------------------------------
// OSS access

OssAccess::OssAccess(const oracles::OssInstance& inst, Stage stage, int dispatch_budget)
    : inst_(&inst), stage_(stage), dispatch_budget_(dispatch_budget) {}

const oracles::OssParams& OssAccess::params() const { return inst_->params(); }

void OssAccess::charge_dispatch(int count) {
  if (stage_ == Stage::Two)
    throw RestrictionViolation("stage 2 may not query the GenQKey dispatch oracle");
  if (dispatch_queries_ + count > dispatch_budget_)
    throw RestrictionViolation("stage 1 exceeded its dispatch budget of " +
                               std::to_string(dispatch_budget_));
  dispatch_queries_ += count;
}

std::uint64_t OssAccess::dispatch(std::uint64_t input) {
  charge_dispatch(1);
  return inst_->dispatch(input);
}

oss::OssKey OssAccess::gen_qkey(Rng& rng) {
  charge_dispatch(oss::kGenQKeyQueries);
  return oss::gen_qkey(*inst_, rng);
}

std::optional<std::uint64_t> OssAccess::sign(oss::OssKey key, bool m, int jmax, Rng& rng) {
  const auto outcome = oss::sign_detailed(*inst_, std::move(key), m, jmax, rng);
  sign_queries_ += outcome.signature ? outcome.success_iteration + 1 : jmax;
  return outcome.signature;
}

bool OssAccess::D(std::uint64_t y, std::uint64_t v) {
  ++sign_queries_;
  return inst_->D(y, v);
}

bool OssAccess::D0(std::uint64_t y, bool m, std::uint64_t v) {
  ++verify_queries_;
  return inst_->D0(y, m, v);
}

// ---------------------------------------------------------------------------
// ROM access

RomAccess::RomAccess(const oracles::RandomFunction& h, Stage stage, int query_budget,
                     std::vector<Predicate> predicates)
    : h_(&h), stage_(stage), query_budget_(query_budget), predicates_(std::move(predicates)) {}

int RomAccess::in_width() const { return h_->in_width(); }
int RomAccess::out_width() const { return h_->out_width(); }

int RomAccess::total_queries() const {
  int total = 0;
  for (int q : round_queries_) total += q;
  return total;
}

bool RomAccess::in_union(std::uint64_t x) const {
  return std::any_of(predicates_.begin(), predicates_.end(),
                     [x](const Predicate& p) { return p(x); });
}

std::uint64_t RomAccess::H(std::uint64_t x) {
  if (stage_ == Stage::Two) throw RestrictionViolation("stage 2 may not query H directly");
  if (total_queries() >= query_budget_)
    throw RestrictionViolation("stage 1 exceeded its H budget of " +
                               std::to_string(query_budget_));
  require(x <= low_mask(h_->in_width()), "RomAccess::H: input wider than g1");
  ++round_queries_.back();
  return (*h_)(x);
}

std::optional<std::uint64_t> RomAccess::section(std::uint64_t x) {
  ++section_queries_;
  if (x > low_mask(h_->in_width()) || !in_union(x)) return std::nullopt;
  return (*h_)(x);
}

bool RomAccess::verify(std::uint64_t x, std::uint64_t y) {
  ++verify_queries_;
  return x <= low_mask(h_->in_width()) && (*h_)(x) == y;
}

void RomAccess::declare(Predicate p) {
  if (stage_ == Stage::Two) throw RestrictionViolation("stage 2 may not declare predicates");
  predicates_.push_back(std::move(p));
  round_queries_.push_back(0);
}

// ---------------------------------------------------------------------------
// Game runners

namespace {

GameReport summarize(std::string script, std::vector<GameTrial> trials) {
  GameReport report;
  report.script = std::move(script);
  long outputs = 0;
  long valid = 0;
  for (const auto& t : trials) {
    outputs += t.outputs;
    valid += t.valid_outputs;
    if (t.violation) {
      ++report.violations;
      continue;
    }
    report.max_distinct_valid = std::max(report.max_distinct_valid, t.distinct_valid);
    if (t.distinct_valid > t.bound) report.within_bound = false;
  }
  report.valid_rate = outputs > 0 ? static_cast<double>(valid) / static_cast<double>(outputs) : 0;
  report.mean_valid_per_trial =
      trials.empty() ? 0 : static_cast<double>(valid) / static_cast<double>(trials.size());
  report.trials = std::move(trials);
  return report;
}

enum Stream : std::uint64_t { kStage1 = 1, kStage2 = 2, kOracle = 3 };

GameTrial oss_trial(const oracles::OssInstance& inst, const OssScript& script,
                    std::uint64_t master, std::uint64_t t) {
  GameTrial trial;
  const auto& p = inst.params();
  Leakage leakage;
  std::vector<OssOutput> outputs;
  OssAccess first(inst, Stage::One, script.query_budget);
  OssAccess second(inst, Stage::Two, 0);
  try {
    Rng rng1(derive_seed(master, kStage1, t));
    leakage = script.stage1(first, rng1);
    trial.stage1_queries = first.dispatch_queries();
    trial.bound = 2 * trial.stage1_queries;
    Rng rng2(derive_seed(master, kStage2, t));
    outputs = script.stage2(second, leakage, rng2);
  } catch (const RestrictionViolation& e) {
    trial.stage1_queries = first.dispatch_queries();
    trial.bound = 2 * trial.stage1_queries;
    trial.violation = true;
    trial.violation_message = e.what();
    return trial;
  }
  trial.stage2_queries = second.sign_queries() + second.verify_queries();
  trial.outputs = static_cast<int>(outputs.size());
  std::set<std::uint64_t> distinct;
  for (const auto& o : outputs) {
    const bool in_range = o.vk <= low_mask(p.r) && o.sig <= low_mask(p.k);
    if (!in_range || !inst.D0(o.vk, o.m, o.sig)) continue;
    ++trial.valid_outputs;
    distinct.insert(o.vk);
  }
  trial.distinct_valid = static_cast<int>(distinct.size());
  return trial;
}

GameTrial rom_trial(int g1, int g2, const RomScript& script, std::uint64_t master,
                    std::uint64_t t) {
  GameTrial trial;
  const oracles::RandomFunction h(g1, g2, derive_seed(master, kOracle, t));
  Leakage leakage;
  std::vector<RomOutput> outputs;
  RomAccess first(h, Stage::One, script.query_budget);
  std::optional<RomAccess> second;
  try {
    Rng rng1(derive_seed(master, kStage1, t));
    leakage = script.stage1(first, rng1);
    trial.stage1_queries = first.total_queries();
    trial.bound = trial.stage1_queries;
    second.emplace(h, Stage::Two, 0, first.predicates());
    Rng rng2(derive_seed(master, kStage2, t));
    outputs = script.stage2(*second, leakage, rng2);
  } catch (const RestrictionViolation& e) {
    trial.stage1_queries = first.total_queries();
    trial.bound = trial.stage1_queries;
    trial.violation = true;
    trial.violation_message = e.what();
    return trial;
  }
  trial.stage2_queries = second->verify_queries() + second->section_queries();
  trial.outputs = static_cast<int>(outputs.size());
  std::set<std::uint64_t> outside;
  std::set<std::uint64_t> inside;
  for (const auto& o : outputs) {
    if (o.x > low_mask(g1) || h(o.x) != o.y) continue;
    ++trial.valid_outputs;
    (second->in_union(o.x) ? inside : outside).insert(o.x);
  }
  trial.distinct_valid = static_cast<int>(outside.size());
  trial.valid_inside_predicates = static_cast<int>(inside.size());
  return trial;
}

}  // namespace

GameReport run_oss_incompressibility(const oracles::OssInstance& inst, const OssScript& script,
                                     int trials, Rng& rng, int threads) {
  require(trials > 0, "run_oss_incompressibility: trials must be positive");
  require(script.stage1 && script.stage2, "run_oss_incompressibility: script has empty stages");
  const std::uint64_t master = rng.next_u64();
  std::vector<GameTrial> results(static_cast<std::size_t>(trials));
  parallel_for(results.size(), threads,
               [&](std::size_t t) { results[t] = oss_trial(inst, script, master, t); });
  return summarize(script.name, std::move(results));
}

GameReport run_rom_incompressibility(int g1, int g2, const RomScript& script, int trials,
                                     Rng& rng, int threads) {
  require(trials > 0, "run_rom_incompressibility: trials must be positive");
  require(g1 >= 1 && g1 <= oracles::kMaxTableWidth, "run_rom_incompressibility: g1 out of range");
  require(g2 >= 1 && g2 <= 63, "run_rom_incompressibility: g2 out of range");
  require(script.stage1 && script.stage2, "run_rom_incompressibility: script has empty stages");
  const std::uint64_t master = rng.next_u64();
  std::vector<GameTrial> results(static_cast<std::size_t>(trials));
  parallel_for(results.size(), threads,
               [&](std::size_t t) { results[t] = rom_trial(g1, g2, script, master, t); });
  return summarize(script.name, std::move(results));
}

namespace scripts {

OssScript honest_forwarder(int q, int jmax, int dispatch_budget) {
  OssScript s;
  s.name = "honest-forwarder";
  s.query_budget = dispatch_budget;
  s.stage1 = [q, jmax, dispatch_budget](OssAccess& a, Rng& rng) {
    std::set<std::uint64_t> held;
    Leakage leakage;
    while (static_cast<int>(held.size()) < q &&
           a.dispatch_queries() + oss::kGenQKeyQueries <= dispatch_budget) {
      auto key = a.gen_qkey(rng);
      const std::uint64_t vk = key.vk;
      if (held.count(vk) != 0) continue;
      const auto sig = a.sign(std::move(key), false, jmax, rng);
      if (!sig) continue;
      held.insert(vk);
      leakage.push_back(vk);
      leakage.push_back(*sig);
    }
    return leakage;
  };
  s.stage2 = [](OssAccess&, const Leakage& leakage, Rng&) {
    std::vector<OssOutput> out;
    for (std::size_t i = 0; i + 1 < leakage.size(); i += 2)
      out.push_back({leakage[i], false, leakage[i + 1]});
    return out;
  };
  return s;
}

OssScript oss_guesser(int guesses) {
  OssScript s;
  s.name = "guesser";
  s.stage1 = [](OssAccess&, Rng&) { return Leakage{}; };
  s.stage2 = [guesses](OssAccess& a, const Leakage&, Rng& rng) {
    std::vector<OssOutput> out;
    for (int i = 0; i < guesses; ++i) {
      OssOutput o;
      o.vk = rng.bits(a.params().r);
      o.m = rng.coin();
      o.sig = rng.bits(a.params().k);
      out.push_back(o);
    }
    return out;
  };
  return s;
}

OssScript oss_dispatch_violator() {
  OssScript s;
  s.name = "dispatch-violator";
  s.stage1 = [](OssAccess&, Rng&) { return Leakage{}; };
  s.stage2 = [](OssAccess& a, const Leakage&, Rng&) {
    a.dispatch(oracles::dispatch_input_for_x(a.params(), 0));
    return std::vector<OssOutput>{};
  };
  return s;
}

RomScript rom_forwarder(int count) {
  RomScript s;
  s.name = "rom-forwarder";
  s.query_budget = count;
  s.stage1 = [count](RomAccess& a, Rng&) {
    Leakage leakage;
    for (int x = 0; x < count; ++x) {
      leakage.push_back(static_cast<std::uint64_t>(x));
      leakage.push_back(a.H(static_cast<std::uint64_t>(x)));
    }
    return leakage;
  };
  s.stage2 = [](RomAccess&, const Leakage& leakage, Rng&) {
    std::vector<RomOutput> out;
    for (std::size_t i = 0; i + 1 < leakage.size(); i += 2)
      out.push_back({leakage[i], leakage[i + 1]});
    return out;
  };
  return s;
}

RomScript rom_guesser(int q) {
  RomScript s;
  s.name = "rom-guesser";
  s.stage1 = [](RomAccess&, Rng&) { return Leakage{}; };
  s.stage2 = [q](RomAccess& a, const Leakage&, Rng& rng) {
    require(q <= (1 << a.in_width()), "rom_guesser: more guesses than inputs");
    std::set<std::uint64_t> tried;
    std::vector<RomOutput> out;
    while (static_cast<int>(tried.size()) < q) {
      const std::uint64_t x = rng.bits(a.in_width());
      if (!tried.insert(x).second) continue;
      const std::uint64_t y = rng.bits(a.out_width());
      if (a.verify(x, y)) out.push_back({x, y});
    }
    return out;
  };
  return s;
}

RomScript rom_section_reader(int count) {
  RomScript s;
  s.name = "rom-section-reader";
  s.stage1 = [count](RomAccess& a, Rng&) {
    const auto bound = static_cast<std::uint64_t>(count);
    a.declare({"x < " + std::to_string(count), [bound](std::uint64_t x) { return x < bound; }});
    return Leakage{};
  };
  s.stage2 = [count](RomAccess& a, const Leakage&, Rng&) {
    std::vector<RomOutput> out;
    for (int x = 0; x < count; ++x) {
      const auto ux = static_cast<std::uint64_t>(x);
      if (auto y = a.section(ux)) out.push_back({ux, *y});
    }
    return out;
  };
  return s;
}

RomScript rom_violator() {
  RomScript s;
  s.name = "rom-violator";
  s.stage1 = [](RomAccess&, Rng&) { return Leakage{}; };
  s.stage2 = [](RomAccess& a, const Leakage&, Rng&) {
    a.H(0);
    return std::vector<RomOutput>{};
  };
  return s;
}

}  // namespace scripts

// ---------------------------------------------------------------------------
// Subspace statistics

double FrequencyStat::frequency() const {
  return trials > 0 ? static_cast<double>(hits) / trials : 0;
}

double FrequencyStat::sigma() const {
  return trials > 0 ? std::sqrt(expected * (1 - expected) / trials) : 0;
}

bool FrequencyStat::within_3sigma() const {
  const double dev = std::abs(frequency() - expected);
  const double s = sigma();
  return s == 0 ? dev == 0 : dev <= 3 * s;
}

double expected_contains(int d1, int d2) {
  return (std::ldexp(1.0, d2) - 1) / (std::ldexp(1.0, d1) - 1);
}

double expected_oblivious(int d1, int d2) {
  return (std::ldexp(1.0, d1 - d2) - 1) / (std::ldexp(1.0, d1) - 1);
}

namespace {

void check_subspace_bounds(int d1, int d2, int ambient) {
  require(0 <= d2 && d2 <= d1 && d1 >= 1 && d1 <= ambient && ambient <= 12,
          "subspace statistics need 0 <= d2 <= d1 <= ambient <= 12 and d1 >= 1");
}

bool orthogonal_to(const gf2::Subspace& t, const gf2::Vector& v) {
  return std::none_of(t.basis().begin(), t.basis().end(),
                      [&v](const gf2::Vector& b) { return dot(b, v); });
}

}  // namespace

SubspaceReport subspace_stats(int d1, int d2, int ambient, int trials, Rng& rng, int threads) {
  check_subspace_bounds(d1, d2, ambient);
  require(trials > 0, "subspace_stats: trials must be positive");
  const std::uint64_t master = rng.next_u64();
  std::vector<std::pair<char, char>> hits(static_cast<std::size_t>(trials));
  parallel_for(hits.size(), threads, [&](std::size_t t) {
    Rng trial_rng(derive_seed(master, 0, t));
    const auto s = gf2::sample_subspace(gf2::Subspace::whole(ambient), d1, trial_rng);
    const gf2::Vector fixed = s.basis().front();
    const auto s_perp = s.orthogonal_complement();
    gf2::Vector v(ambient);
    do {
      v = gf2::Vector(ambient, trial_rng.bits(ambient));
    } while (s_perp.contains(v));
    const auto t_sub = gf2::sample_subspace(s, d2, trial_rng);
    hits[t] = {static_cast<char>(t_sub.contains(fixed)), static_cast<char>(orthogonal_to(t_sub, v))};
  });

  SubspaceReport report;
  report.d1 = d1;
  report.d2 = d2;
  report.ambient = ambient;
  report.contains = {trials, 0, expected_contains(d1, d2)};
  report.oblivious = {trials, 0, expected_oblivious(d1, d2)};
  for (const auto& [c, o] : hits) {
    report.contains.hits += c;
    report.oblivious.hits += o;
  }
  return report;
}

SubspaceExact subspace_exact(int d1, int d2, int ambient) {
  check_subspace_bounds(d1, d2, ambient);
  require(d1 <= 6, "subspace_exact: d1 must be at most 6");
  std::vector<gf2::Vector> units;
  for (int i = 0; i < d1; ++i) units.push_back(gf2::Vector::unit(ambient, i));
  const gf2::Subspace s(ambient, units);
  const auto members = s.elements();

  // Every d2-subspace of S, found as the span of every d2-tuple of members.
  std::set<std::vector<std::uint64_t>> seen;
  std::vector<gf2::Subspace> subspaces;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d2), 0);
  for (;;) {
    std::vector<gf2::Vector> gens;
    for (auto i : idx) gens.push_back(members[i]);
    auto t = gf2::Subspace::span(ambient, gens);
    if (t.dim() == d2) {
      std::vector<std::uint64_t> key;
      for (const auto& b : t.canonical_basis()) key.push_back(b.bits());
      if (seen.insert(key).second) subspaces.push_back(std::move(t));
    }
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == members.size()) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }

  const gf2::Vector fixed = units.front();
  const auto s_perp = s.orthogonal_complement();
  long contains = 0;
  long hits = 0;
  long total = 0;
  for (const auto& t : subspaces) {
    contains += t.contains(fixed) ? 1 : 0;
    for (std::uint64_t bits = 0; bits <= low_mask(ambient); ++bits) {
      const gf2::Vector v(ambient, bits);
      if (s_perp.contains(v)) continue;
      ++total;
      hits += orthogonal_to(t, v) ? 1 : 0;
    }
  }
  SubspaceExact exact;
  exact.contains = static_cast<double>(contains) / static_cast<double>(subspaces.size());
  exact.oblivious = static_cast<double>(hits) / static_cast<double>(total);
  return exact;
}

// ---------------------------------------------------------------------------
// One-shot structure

OneShotStructure oneshot_structure(const oracles::OssInstance& inst) {
  OneShotStructure result;
  for (std::uint64_t vk = 0; vk <= low_mask(inst.params().r); ++vk) {
    ++result.keys;
    if (inst.is_good_key(vk)) ++result.good_keys;
    const auto zero = oss::enumerate_signatures(inst, vk, false);
    const auto one = oss::enumerate_signatures(inst, vk, true);
    std::vector<std::uint64_t> both;
    std::set_intersection(zero.begin(), zero.end(), one.begin(), one.end(),
                          std::back_inserter(both));
    if (!both.empty()) ++result.overlapping_keys;
  }
  return result;
}

}  // namespace osslab::games
