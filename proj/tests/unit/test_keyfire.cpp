#include <doctest.h>

#include <cmath>
#include <set>

#include "osslab/keyfire.hpp"

using namespace osslab;
using namespace osslab::keyfire;
using oracles::bottom_encode;

namespace {

KeyFireParams params_with_jmax(int jmax) {
  KeyFireParams kp;
  kp.jmax = jmax;
  return kp;
}

KeyFireInstance good_instance(int jmax, std::uint64_t seed = 1) {
  Rng rng(seed);
  return find_good_instance(params_with_jmax(jmax), rng).instance;
}

// Ideal flame with vk measured to `ivk`, normalized.
sim::SparseState collapsed_flame(const KeyFireInstance& inst, std::uint64_t ivk) {
  const sim::SparseState ideal = oss::ideal_flame(inst.oss());
  const sim::RegisterRef vk = ideal.layout().find("vk");
  std::vector<std::pair<sim::Label, sim::Amplitude>> amps;
  for (const auto& e : ideal.entries()) {
    if (vk.read(e.label) == ivk) amps.emplace_back(e.label, e.amp);
  }
  return sim::SparseState::from_amplitudes(ideal.layout(), amps, true);
}

}  // namespace

TEST_CASE("setup") {
  SUBCASE("deterministic under a fixed seed") {
    Rng a(42);
    Rng b(42);
    const SetupResult x = setup(KeyFireParams{}, a);
    const SetupResult y = setup(KeyFireParams{}, b);
    CHECK(x.instance.table_digest() == y.instance.table_digest());
    CHECK(x.flame.dump() == y.flame.dump());
  }
  SUBCASE("flame is the purified key generation") {
    Rng rng(43);
    const SetupResult s = setup(KeyFireParams{}, rng);
    CHECK(sim::fidelity(oss::ideal_flame(s.instance.oss()), s.flame) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.flame.layout() == oss::workspace_layout(KeyFireParams{}.oss));
  }
  SUBCASE("register budget") {
    KeyFireParams kp;
    kp.oss = oracles::OssParams{5, 2, 6};
    Rng rng(44);
    CHECK_THROWS_AS(setup(kp, rng), ParameterError);
    CHECK(clone_layout(KeyFireParams{}).total_width() == 61);
  }
  SUBCASE("O3 releases Hsig exactly when both attestations match") {
    const KeyFireInstance inst = good_instance(10);
    const KeyFireParams& kp = inst.params();
    for (std::uint64_t ivk = 0; ivk < 4; ++ivk) {
      for (std::uint64_t m = 0; m < 16; ++m) {
        const std::uint64_t y0 = bottom_encode(inst.h0(ivk, m), kp.att, true);
        const std::uint64_t y1 = bottom_encode(inst.h1(ivk, m), kp.att, true);
        CHECK(inst.O3(ivk, y0, y1, m) == bottom_encode(inst.Hsig()(m), kp.sig, true));
        CHECK(inst.O3(ivk, y0 ^ 2U, y1, m) == 0);
        CHECK(inst.O3(ivk, y0, 0, m) == 0);
      }
    }
  }
}

TEST_CASE("find_good_instance") {
  Rng rng(5);
  const GoodInstance g = find_good_instance(KeyFireParams{}, rng);
  for (std::uint64_t y = 0; y < 4; ++y) CHECK(g.instance.oss().is_good_key(y));
  CHECK(g.rejected >= 0);
}

TEST_CASE("kf_verify") {
  const KeyFireInstance inst = good_instance(10);
  const KeyFireParams& kp = inst.params();
  int accepted = 0;
  for (std::uint64_t m = 0; m < 16; ++m) {
    const std::uint64_t sig = inst.Hsig()(m);
    CHECK(kf_verify(inst, m, sig));
    CHECK_FALSE(kf_verify(inst, m, sig ^ 1U));
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << kp.sig); ++s) {
      accepted += kf_verify(inst, m, s) ? 1 : 0;
    }
  }
  // Exactly one signature per message out of 2^sig.
  CHECK(accepted == 16);
}

TEST_CASE("attestation_probe") {
  const KeyFireInstance inst = good_instance(10, 2);
  const oracles::OssParams& p = inst.params().oss;
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    sim::SparseState flame = oss::gen_qkey_purified(inst.oss());
    const std::uint64_t z = oracles::dispatch_input_for_x(p, rng.bits(p.n));
    const Attestation a = attestation_probe(inst, flame, z, rng);
    CHECK(a.y0 == bottom_encode(inst.h0(a.ivk, z), inst.params().att, true));
    CHECK(a.y1 == bottom_encode(inst.h1(a.ivk, z), inst.params().att, true));
    CHECK(inst.O2(a.ivk, a.y0, a.y1, z) == inst.oss().dispatch(z));
    CHECK(inst.O2(a.ivk, a.y0, a.y1, z) != 0);
    CHECK(sim::fidelity(collapsed_flame(inst, a.ivk), flame) >=
          1.0 - 4.0 * std::pow(2.0, -inst.params().jmax));
  }
}

TEST_CASE("attestations do not depend on the signature branch") {
  const KeyFireInstance inst = good_instance(10, 3);
  const KeyFireParams& kp = inst.params();
  sim::RegisterLayout layout = oss::workspace_layout(kp.oss);
  layout.add("msg", 1).add("z", kp.oss.dispatch_in_width()).add("out", kp.attestation_width());
  oss::add_sign_ancillas(layout, "", kp.jmax);
  for (std::uint64_t ivk = 0; ivk < 4; ++ivk) {
    for (std::uint64_t z : {0ULL, 5ULL, 77ULL}) {
      sim::SparseState s = oss::coset_state(inst.oss(), ivk).embedded_in(layout);
      s.apply_x("vk", ivk);
      s.apply_x("z", z);
      oss::coherent_sign(s, inst.oss(), oss::SignRegisters{}, kp.jmax);
      s.apply_oracle_xor({inst.O0_oracle(), {"vk", "key", "z"}, "out"});
      const sim::RegisterRef flag = layout.find("flag");
      const sim::RegisterRef out = layout.find("out");
      std::set<std::uint64_t> values;
      for (const auto& e : s.entries()) {
        if (flag.read(e.label) != 0) values.insert(out.read(e.label));
      }
      CHECK(values == std::set<std::uint64_t>{bottom_encode(inst.h0(ivk, z), kp.att, true)});
    }
  }
}

TEST_CASE("kf_sign") {
  const KeyFireInstance inst = good_instance(10, 4);
  const KeyFireParams& kp = inst.params();
  Rng rng(7);
  int signed_ok = 0;
  for (std::uint64_t m = 0; m < 16; ++m) {
    sim::SparseState flame = oss::gen_qkey_purified(inst.oss());
    const KfSignature s = kf_sign(inst, flame, m, rng);
    if (s.signature) {
      ++signed_ok;
      CHECK(*s.signature == inst.Hsig()(m));
      CHECK(kf_verify(inst, m, *s.signature));
    }
    CHECK(sim::fidelity(collapsed_flame(inst, s.attestation.ivk), flame) >=
          1.0 - 4.0 * std::pow(2.0, -kp.jmax));
  }
  CHECK(signed_ok >= 15);
  sim::SparseState flame = oss::gen_qkey_purified(inst.oss());
  CHECK_THROWS_AS(kf_sign(inst, flame, 16, rng), ParameterError);
}

TEST_CASE("gate cancellation leaves the clone unitary unchanged") {
  const KeyFireInstance inst = good_instance(4);
  const sim::RegisterLayout layout = clone_layout(inst.params());
  const auto raw = clone_ops(inst, DanceRegisters{});
  const auto reduced = sim::cancel_inverse_pairs(raw, layout);
  CHECK(reduced.size() < raw.size());
  const sim::SparseState flame = oss::gen_qkey_purified(inst.oss());
  sim::SparseState a = rename_workspace(flame, inst.params().oss, "", kFlamePrefix).embedded_in(layout);
  sim::SparseState b = a;
  a.apply(raw);
  b.apply(reduced);
  CHECK(std::abs(sim::overlap(a, b) - 1.0) < 1e-10);
}

TEST_CASE("clone sub-sequences invert") {
  const KeyFireInstance inst = good_instance(4);
  const KeyFireParams& kp = inst.params();
  const sim::RegisterLayout layout = clone_layout(kp);
  const auto dance = attestation_dance_ops(inst, DanceRegisters{});
  Rng rng(8);
  for (int i = 0; i < 5; ++i) {
    const sim::SparseState flame_side = oss::ideal_flame(inst.oss(), kFlamePrefix);
    sim::SparseState s =
        sim::tensor(flame_side, random_workspace_state(kp.oss, 3, rng), layout);
    const sim::SparseState before = s;
    s.apply(dance);
    s.apply(sim::inverse(dance));
    CHECK(std::abs(sim::overlap(before, s) - 1.0) < 1e-9);
  }
}

TEST_CASE("kf_clone") {
  const KeyFireInstance inst = good_instance(6);
  const double budget = clone_budget(inst.params());
  CHECK(budget == doctest::Approx(0.5));
  const sim::SparseState flame = oss::gen_qkey_purified(inst.oss());

  const CloneResult grover = kf_clone(inst, flame);
  CHECK(grover.fidelity >= 1.0 - budget);
  CHECK(grover.fidelity <= 1.0 + 1e-9);
  CHECK(grover.ancilla_zero_weight >= 1.0 - budget);
  CHECK(grover.source_fidelity >= grover.fidelity - 1e-12);
  CHECK(grover.clone_fidelity >= grover.fidelity - 1e-12);

  const CloneResult exact = kf_clone(inst, flame, SignMode::ExactSurrogate);
  CHECK(exact.fidelity >= 1.0 - 1e-8);
  CHECK(exact.ancilla_zero_weight >= 1.0 - 1e-8);

  SUBCASE("a copy handed out signs and verifies") {
    Rng rng(9);
    int ok = 0;
    for (int i = 0; i < 20; ++i) {
      sim::SparseState copy = take_copy(grover.state, inst.params().oss, kClonePrefix, rng);
      const std::uint64_t m = rng.bits(inst.params().nu);
      const KfSignature s = kf_sign(inst, copy, m, rng);
      if (s.signature && kf_verify(inst, m, *s.signature)) ++ok;
    }
    CHECK(ok >= 17);
  }
}

TEST_CASE("clone_iteration_check") {
  const KeyFireInstance inst = good_instance(4);
  const oracles::OssParams& p = inst.params().oss;
  const double bound = 6.0 * std::pow(2.0, -inst.params().jmax);
  Rng rng(10);

  SUBCASE("zero zeta") {
    const sim::SparseState zero(oss::workspace_layout(p, kClonePrefix));
    CHECK(clone_iteration_check(inst, zero).deficit <= bound);
    CHECK(clone_iteration_check(inst, zero, 0, SignMode::ExactSurrogate).deficit < 1e-9);
  }
  SUBCASE("sliced and direct computations agree") {
    CloneIterationChecker checker(inst);
    for (int i = 0; i < 4; ++i) {
      const sim::SparseState zeta = random_workspace_state(p, 2, rng);
      const double sliced = checker.check(zeta, i % 2).deficit;
      const double direct = clone_iteration_check_direct(inst, zeta, i % 2).deficit;
      CHECK(sliced == doctest::Approx(direct).epsilon(1e-10));
      CHECK(sliced <= bound + 1e-8);
    }
  }
  SUBCASE("exact surrogate") {
    CloneIterationChecker checker(inst, SignMode::ExactSurrogate);
    for (int i = 0; i < 5; ++i) {
      CHECK(checker.check(random_workspace_state(p, 3, rng), i % 2).deficit < 1e-9);
    }
  }
}

TEST_CASE("clone_chain") {
  const KeyFireInstance inst = good_instance(6);
  const ChainResult r = clone_chain(inst, 2);
  CHECK(r.copy_fidelity.size() == 3);
  CHECK(r.ancilla_zero.size() == 1);
  CHECK(r.threshold == doctest::Approx(1.0 - 3 * clone_budget(inst.params())));
  CHECK(r.passed);
  for (double f : r.copy_fidelity) CHECK(f >= r.joint_lower_bound - 1e-12);
  CHECK_THROWS_AS(clone_chain(inst, 0), ParameterError);
}
