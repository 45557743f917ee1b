#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "osslab/oss.hpp"

using namespace osslab;
using namespace osslab::oss;
using oracles::make_oss_instance;
using oracles::OssSeeds;

namespace {

// Instance at (n, r, k) = (2, 1, 2) with A_0 = [11] and b_0 = 01.
OssInstance tiny_instance() {
  for (std::uint64_t seed = 0;; ++seed) {
    OssInstance inst = make_oss_instance(OssParams{2, 1, 2}, OssSeeds{seed, seed});
    if (inst.A(0).column(0) == gf2::Vector::from_string("11") &&
        inst.b(0) == gf2::Vector::from_string("01")) {
      return inst;
    }
  }
}

// Default-sized instance with at least one good and one bad key.
OssInstance mixed_instance() {
  for (std::uint64_t seed = 1;; ++seed) {
    OssInstance inst = make_oss_instance(OssParams{}, OssSeeds{seed, seed + 1000});
    int good = 0;
    for (std::uint64_t y = 0; y < 4; ++y) good += inst.is_good_key(y) ? 1 : 0;
    if (good > 0 && good < 4) return inst;
  }
}

std::uint64_t first_key(const OssInstance& inst, bool good) {
  for (std::uint64_t y = 0;; ++y) {
    if (inst.is_good_key(y) == good) return y;
  }
}

sim::RegisterLayout sign_layout(const OssParams& p, int jmax) {
  sim::RegisterLayout l;
  l.add("vk", p.r).add("key", p.k).add("msg", 1);
  add_sign_ancillas(l, "", jmax);
  return l;
}

sim::SparseState key_in_sign_layout(const OssInstance& inst, std::uint64_t vk, bool m, int jmax) {
  sim::SparseState s = coset_state(inst, vk).embedded_in(sign_layout(inst.params(), jmax));
  s.apply_x("vk", vk);
  if (m) s.apply_x("msg");
  return s;
}

}  // namespace

TEST_CASE("workspace layout") {
  const sim::RegisterLayout l = workspace_layout(OssParams{}, "f.");
  CHECK(l.total_width() == 16);
  CHECK(l.find("f.qin").width == 9);
  CHECK(l.find("f.qout").width == 7);
  CHECK(l.find("f.key").width == 4);
  CHECK(l.find("f.vk").width == 2);
  CHECK(l.find("f.xfield").width == 4);
}

TEST_CASE("gen_qkey_purified") {
  Rng rng(1);
  const OssInstance inst = oracles::gen_oss_oracles(OssParams{}, rng);
  const sim::SparseState flame = gen_qkey_purified(inst);
  CHECK(flame.support_size() == 16);
  CHECK(std::abs(sim::overlap(ideal_flame(inst), flame) - 1.0) < 1e-12);
  CHECK(flame.probability(sim::Control().require("sel", 0).require("pm", 0).require("qout", 0)) ==
        doctest::Approx(1.0));
  for (std::uint64_t y = 0; y < 4; ++y) CHECK(flame.probability("vk", y) == doctest::Approx(0.25));
}

TEST_CASE("gen_qkey") {
  SUBCASE("vk is uniform at (2, 1, 2)") {
    Rng rng(3);
    const OssInstance inst = oracles::gen_oss_oracles(OssParams{2, 1, 2}, rng);
    int ones = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) ones += static_cast<int>(gen_qkey(inst, rng).vk);
    CHECK(std::abs(ones - trials / 2.0) < 3 * std::sqrt(trials * 0.25));
  }
  SUBCASE("key register is the coset state") {
    Rng rng(4);
    const OssInstance inst = oracles::gen_oss_oracles(OssParams{}, rng);
    for (int i = 0; i < 20; ++i) {
      const OssKey key = gen_qkey(inst, rng);
      CHECK(key.state.support_size() == 4);
      CHECK(std::abs(sim::overlap(coset_state(inst, key.vk), key.state) - 1.0) < 1e-12);
    }
  }
  SUBCASE("tiny instance key for vk 0") {
    const OssInstance inst = tiny_instance();
    const sim::SparseState s = coset_state(inst, 0);
    CHECK(s.probability("key", parse_bits("01")) == doctest::Approx(0.5));
    CHECK(s.probability("key", parse_bits("10")) == doctest::Approx(0.5));
  }
}

TEST_CASE("measured signing") {
  SUBCASE("tiny coset signs 01 for message 0") {
    const OssInstance inst = tiny_instance();
    Rng rng(5);
    int successes = 0;
    for (int i = 0; i < 200; ++i) {
      const SignOutcome out = sign_detailed(inst, OssKey{0, coset_state(inst, 0)}, false, 1, rng);
      if (out.signature) {
        ++successes;
        CHECK(*out.signature == parse_bits("01"));
      }
    }
    CHECK(successes > 60);
    CHECK(successes < 140);
  }
  SUBCASE("good-key success rate at jmax 8") {
    const OssInstance inst = mixed_instance();
    const std::uint64_t vk = first_key(inst, true);
    Rng rng(6);
    int ok = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      const bool m = (i & 1) != 0;
      const auto sig = sign(inst, OssKey{vk, coset_state(inst, vk)}, m, 8, rng);
      if (sig) {
        ++ok;
        CHECK(verify(inst, vk, m, *sig));
      }
    }
    const double p = 1.0 - std::pow(2.0, -8);
    CHECK(ok >= trials * p - 3 * std::sqrt(trials * p * (1 - p)));
  }
  SUBCASE("bad key cannot sign the missing message") {
    const OssInstance inst = mixed_instance();
    const std::uint64_t vk = first_key(inst, false);
    const bool missing = !inst.b(vk).first();
    CHECK(enumerate_signatures(inst, vk, missing).empty());
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
      CHECK_FALSE(sign(inst, OssKey{vk, coset_state(inst, vk)}, missing, 6, rng).has_value());
    }
  }
}

TEST_CASE("verify and enumerate_signatures") {
  Rng rng(8);
  const OssInstance inst = oracles::gen_oss_oracles(OssParams{5, 2, 6}, rng);
  const OssParams& p = inst.params();
  for (std::uint64_t vk = 0; vk < 4; ++vk) {
    const auto s0 = enumerate_signatures(inst, vk, false);
    const auto s1 = enumerate_signatures(inst, vk, true);
    CHECK(s0.size() + s1.size() == (std::size_t{1} << p.coset_dim()));
    std::set<std::uint64_t> both(s0.begin(), s0.end());
    for (auto v : s1) CHECK(both.insert(v).second);
    if (inst.is_good_key(vk)) {
      CHECK_FALSE(s0.empty());
      CHECK_FALSE(s1.empty());
    }
    for (std::uint64_t v = 0; v < 64; ++v) {
      CHECK(verify(inst, vk, false, v) == std::binary_search(s0.begin(), s0.end(), v));
      CHECK(verify(inst, vk, true, v) == std::binary_search(s1.begin(), s1.end(), v));
    }
    for (auto v : s0) CHECK_FALSE(verify(inst, vk, false, v ^ 1U));
    const std::uint64_t b = inst.b(vk).bits();
    CHECK(verify(inst, vk, (b & 1U) != 0, b));
  }
}

TEST_CASE("coherent signing") {
  const OssInstance inst = mixed_instance();
  const OssParams& p = inst.params();
  const int jmax = 10;
  const SignRegisters regs;

  SUBCASE("round trip through the inverse") {
    Rng rng(9);
    for (std::uint64_t vk = 0; vk < 4; ++vk) {
      for (int m = 0; m < 2; ++m) {
        sim::SparseState s = key_in_sign_layout(inst, vk, m == 1, jmax);
        const sim::SparseState before = s;
        const auto t = coherent_sign(s, inst, regs, jmax);
        s.apply_inverse(t.ops);
        CHECK(std::abs(sim::overlap(before, s) - 1.0) < 1e-9);
      }
    }
  }
  SUBCASE("success branches hold valid signatures and the failure weight halves") {
    const std::uint64_t vk = first_key(inst, true);
    for (int m = 0; m < 2; ++m) {
      sim::SparseState s = key_in_sign_layout(inst, vk, m == 1, jmax);
      coherent_sign(s, inst, regs, jmax);
      const sim::RegisterRef flag = s.layout().find("flag");
      const sim::RegisterRef key = s.layout().find("key");
      for (const auto& e : s.entries()) {
        if (flag.read(e.label) != 0) CHECK(inst.D0(vk, m == 1, key.read(e.label)));
        CHECK(std::popcount(flag.read(e.label)) <= 1);
      }
      CHECK(s.probability("flag", 0) == doctest::Approx(std::pow(2.0, -jmax)).epsilon(1e-9));
    }
  }
  SUBCASE("exact surrogate never fails on a good key") {
    const std::uint64_t vk = first_key(inst, true);
    for (int m = 0; m < 2; ++m) {
      sim::SparseState s = key_in_sign_layout(inst, vk, m == 1, jmax);
      const sim::SparseState before = s;
      const auto t = coherent_sign(s, inst, regs, jmax, SignMode::ExactSurrogate);
      const sim::RegisterRef key = s.layout().find("key");
      for (const auto& e : s.entries()) CHECK(inst.D0(vk, m == 1, key.read(e.label)));
      s.apply_inverse(t.ops);
      CHECK(std::abs(sim::overlap(before, s) - 1.0) < 1e-12);
    }
  }
  SUBCASE("dirty ancillas are refused") {
    sim::SparseState s = key_in_sign_layout(inst, 0, false, jmax);
    s.apply_x("mark", 1);
    CHECK_THROWS_AS(coherent_sign(s, inst, regs, jmax), ParameterError);
  }
  SUBCASE("coherent and measured distributions agree") {
    const std::uint64_t vk = first_key(inst, true);
    const int j = 4;
    sim::SparseState s = key_in_sign_layout(inst, vk, false, j);
    coherent_sign(s, inst, regs, j);
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> exact;
    for (const auto& [outcome, prob] : s.distribution({"flag", "key"})) {
      exact[{outcome & low_mask(j), outcome >> j}] += prob;
    }
    Rng rng(10);
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> empirical;
    const int trials = 4000;
    for (int i = 0; i < trials; ++i) {
      const SignOutcome out = sign_detailed(inst, OssKey{vk, coset_state(inst, vk)}, false, j, rng);
      const std::uint64_t flags = out.success_iteration < 0 ? 0 : (std::uint64_t{1} << out.success_iteration);
      empirical[{flags, out.final_key}] += 1.0 / trials;
    }
    double tv = 0;
    for (const auto& [k, v] : exact) tv += std::abs(v - empirical[k]);
    for (const auto& [k, v] : empirical) {
      if (!exact.count(k)) tv += v;
    }
    CHECK(tv / 2 < 0.04);
    (void)p;
  }
}
