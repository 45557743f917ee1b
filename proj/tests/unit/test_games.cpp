#include <doctest.h>

#include <cmath>

#include "osslab/games.hpp"

using namespace osslab;
using namespace osslab::games;

namespace {

Predicate always() { return {"all inputs", [](std::uint64_t) { return true; }}; }
Predicate never() { return {"no input", [](std::uint64_t) { return false; }}; }

// x(3) | out(1) with a parity oracle.
sim::RegisterLayout query_layout() {
  sim::RegisterLayout layout;
  layout.add("x", 3).add("out", 1);
  return layout;
}

sim::OracleBinding parity_query() {
  auto parity = oracles::make_oracle("parity", 3, 1, [](std::uint64_t x) {
    return static_cast<std::uint64_t>(__builtin_popcountll(x) & 1);
  });
  return {parity, {"x"}, "out"};
}

QueryProgram classical_program(std::uint64_t x0) {
  QueryProgram prog{"classical", sim::init_state(query_layout()), {}, {}, 1};
  prog.initial.apply_x("x", x0);
  prog.queries.push_back(parity_query());
  return prog;
}

// Uniform superposition over x in {0, 1, 2, 3}: H on the low two bits of x.
QueryProgram uniform_program() {
  sim::RegisterLayout layout;
  layout.add("lo", 2).add("hi", 1).add("out", 1).alias("x", {"lo", "hi"});
  QueryProgram prog{"uniform", sim::init_state(layout), {}, {}, 1};
  prog.before = {{sim::ops::hadamard("lo")}};
  prog.queries.push_back(parity_query());
  return prog;
}

oracles::OssInstance default_instance(std::uint64_t seed) {
  Rng rng(seed);
  return oracles::gen_oss_oracles(oracles::OssParams{}, rng);
}

}  // namespace

TEST_CASE("query weight of a classical query is exact") {
  Rng rng(1);
  const auto report = estimate_query_weight(classical_program(5), always(), 1000, rng);
  REQUIRE(report.weights.size() == 1);
  CHECK(report.weights.at(5) == 1.0);
  CHECK(report.total == 1.0);
  CHECK(report.sigma == 0.0);
}

TEST_CASE("query weight of a uniform query converges at the binomial rate") {
  const auto prog = uniform_program();
  for (int samples : {1000, 10000}) {
    Rng rng(static_cast<std::uint64_t>(samples));
    const auto report = estimate_query_weight(prog, always(), samples, rng);
    CHECK(report.weights.size() == 4);
    const double sigma = std::sqrt(0.25 * 0.75 / samples);
    double sum = 0;
    for (const auto& [x, w] : report.weights) {
      CHECK(x < 4);
      CHECK(std::abs(w - 0.25) <= 3 * sigma);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("query weight with an unsatisfied predicate is zero") {
  Rng rng(2);
  const auto report = estimate_query_weight(uniform_program(), never(), 500, rng);
  CHECK(report.weights.empty());
  CHECK(report.total == 0.0);
  CHECK(report.predicate == "no input");
}

TEST_CASE("query weight splits over several queries") {
  // Two queries, the first on |1>, the second on |6>: each gets weight 1.
  QueryProgram prog{"two", sim::init_state(query_layout()), {}, {}, 2};
  prog.initial.apply_x("x", 1);
  prog.before = {{}, {sim::ops::flip("x", 0b111)}};
  prog.queries = {parity_query(), parity_query()};
  Rng rng(3);
  const auto report = estimate_query_weight(prog, always(), 4000, rng);
  REQUIRE(report.weights.size() == 2);
  CHECK(report.weights.at(1) + report.weights.at(6) == doctest::Approx(2.0));
  CHECK(std::abs(report.weights.at(1) - 1.0) < 0.1);
}

TEST_CASE("query weight rejects programs over their declared count") {
  auto prog = classical_program(0);
  prog.queries.push_back(parity_query());
  Rng rng(4);
  CHECK_THROWS_AS(estimate_query_weight(prog, always(), 10, rng), ParameterError);
}

TEST_CASE("OSS incompressibility: honest forwarder") {
  const auto inst = default_instance(11);
  Rng rng(5);
  for (int q : {1, 2, 3}) {
    const auto report = run_oss_incompressibility(inst, scripts::honest_forwarder(q, 10), 5, rng);
    CHECK(report.violations == 0);
    CHECK(report.within_bound);
    for (const auto& t : report.trials) {
      CHECK(t.distinct_valid == q);
      CHECK(t.valid_outputs == q);
      CHECK(t.stage1_queries >= 2 * q);
      CHECK(t.bound == 2 * t.stage1_queries);
    }
  }
}

TEST_CASE("OSS incompressibility: blind guesses hit at the coset rate") {
  const auto inst = default_instance(12);
  Rng rng(6);
  const int trials = 500;
  const int guesses = 20;
  const auto report = run_oss_incompressibility(inst, scripts::oss_guesser(guesses), trials, rng);
  const auto& p = inst.params();
  const double expected = std::ldexp(1.0, p.n - p.r - 1) / std::ldexp(1.0, p.k);
  const double sigma = std::sqrt(expected * (1 - expected) / (trials * guesses));
  CHECK(std::abs(report.valid_rate - expected) <= 3 * sigma);
  CHECK(report.violations == 0);
  for (const auto& t : report.trials) CHECK(t.stage1_queries == 0);
}

TEST_CASE("OSS incompressibility: stage-2 dispatch is a violation") {
  const auto inst = default_instance(13);
  Rng rng(7);
  const auto report = run_oss_incompressibility(inst, scripts::oss_dispatch_violator(), 4, rng);
  CHECK(report.violations == 4);
  for (const auto& t : report.trials) {
    CHECK(t.violation);
    CHECK(t.violation_message.find("stage 2") != std::string::npos);
  }
  OssAccess second(inst, Stage::Two, 100);
  Rng key_rng(1);
  CHECK_THROWS_AS(second.gen_qkey(key_rng), RestrictionViolation);
  CHECK_NOTHROW(second.D(0, 1));
  CHECK_NOTHROW(second.D0(0, false, 1));
}

TEST_CASE("OSS incompressibility: stage-1 budget is enforced") {
  const auto inst = default_instance(14);
  OssAccess first(inst, Stage::One, 3);
  Rng rng(1);
  first.gen_qkey(rng);
  CHECK(first.dispatch_queries() == 2);
  CHECK_THROWS_AS(first.gen_qkey(rng), RestrictionViolation);
  CHECK_NOTHROW(first.dispatch(0));
  CHECK_THROWS_AS(first.dispatch(0), RestrictionViolation);
}

TEST_CASE("ROM incompressibility scripts") {
  Rng rng(8);
  SUBCASE("forwarder yields exactly s pairs") {
    for (int s : {1, 4, 9}) {
      const auto report = run_rom_incompressibility(6, 8, scripts::rom_forwarder(s), 10, rng);
      CHECK(report.violations == 0);
      for (const auto& t : report.trials) {
        CHECK(t.distinct_valid == s);
        CHECK(t.bound == s);
      }
    }
  }
  SUBCASE("guesser succeeds at q 2^-g2") {
    const int q = 8;
    const int g2 = 4;
    const int trials = 4000;
    const auto report = run_rom_incompressibility(8, g2, scripts::rom_guesser(q), trials, rng);
    const double p = std::ldexp(1.0, -g2);
    const double sigma = std::sqrt(q * p * (1 - p) / trials);
    CHECK(std::abs(report.mean_valid_per_trial - q * p) <= 3 * sigma);
  }
  SUBCASE("pairs inside a declared predicate are not counted") {
    const auto report = run_rom_incompressibility(6, 8, scripts::rom_section_reader(5), 10, rng);
    for (const auto& t : report.trials) {
      CHECK(t.valid_outputs == 5);
      CHECK(t.valid_inside_predicates == 5);
      CHECK(t.distinct_valid == 0);
      CHECK(t.bound == 0);
    }
    CHECK(report.within_bound);
  }
  SUBCASE("stage-2 H query is a violation") {
    const auto report = run_rom_incompressibility(6, 8, scripts::rom_violator(), 3, rng);
    CHECK(report.violations == 3);
  }
}

TEST_CASE("section oracle only answers inside declared predicates") {
  const oracles::RandomFunction h(4, 4, 99);
  RomAccess first(h, Stage::One, 10);
  CHECK_FALSE(first.section(3).has_value());
  first.H(3);
  first.declare({"x == 3", [](std::uint64_t x) { return x == 3; }});
  CHECK(first.section(3) == h(3));
  CHECK(first.round_queries() == std::vector<int>{1, 0});
  RomAccess second(h, Stage::Two, 0, first.predicates());
  CHECK(second.section(3) == h(3));
  CHECK_FALSE(second.section(4).has_value());
  CHECK(second.verify(5, h(5)));
  CHECK_THROWS_AS(second.declare(always()), RestrictionViolation);
}

TEST_CASE("game reports do not depend on the thread count") {
  const auto inst = default_instance(15);
  Rng a(9);
  Rng b(9);
  const auto one = run_oss_incompressibility(inst, scripts::honest_forwarder(2, 10), 8, a, 1);
  const auto four = run_oss_incompressibility(inst, scripts::honest_forwarder(2, 10), 8, b, 4);
  REQUIRE(one.trials.size() == four.trials.size());
  for (std::size_t i = 0; i < one.trials.size(); ++i)
    CHECK(one.trials[i].stage1_queries == four.trials[i].stage1_queries);
}

TEST_CASE("subspace statistics") {
  Rng rng(10);
  SUBCASE("d1 = 2, d2 = 1 gives 1/3") {
    const auto r = subspace_stats(2, 1, 4, 100000, rng);
    CHECK(r.contains.expected == doctest::Approx(1.0 / 3));
    CHECK(r.contains.within_3sigma());
    CHECK(r.oblivious.within_3sigma());
  }
  SUBCASE("d2 = d1 gives T = S") {
    const auto r = subspace_stats(3, 3, 5, 2000, rng);
    CHECK(r.contains.frequency() == 1.0);
    CHECK(r.oblivious.frequency() == 0.0);
    CHECK(r.contains.within_3sigma());
    CHECK(r.oblivious.within_3sigma());
  }
  SUBCASE("d1 = 4, d2 = 2 gives p = 0.2") {
    CHECK(expected_oblivious(4, 2) == doctest::Approx(0.2));
    const auto r = subspace_stats(4, 2, 6, 100000, rng);
    CHECK(r.oblivious.within_3sigma());
    CHECK(r.contains.within_3sigma());
  }
  SUBCASE("bounds") {
    CHECK_THROWS_AS(subspace_stats(2, 3, 4, 10, rng), ParameterError);
    CHECK_THROWS_AS(subspace_stats(4, 2, 13, 10, rng), ParameterError);
  }
}

TEST_CASE("subspace formulas match exhaustive enumeration") {
  for (auto [d1, d2] : {std::pair{4, 2}, {2, 1}, {3, 1}, {4, 3}, {5, 2}}) {
    const auto exact = subspace_exact(d1, d2, 5);
    CHECK(exact.contains == doctest::Approx(expected_contains(d1, d2)).epsilon(1e-12));
    CHECK(exact.oblivious == doctest::Approx(expected_oblivious(d1, d2)).epsilon(1e-12));
  }
}

TEST_CASE("one-shot structure holds on random instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = oneshot_structure(default_instance(seed));
    CHECK(r.ok());
    CHECK(r.keys == 4);
  }
}
