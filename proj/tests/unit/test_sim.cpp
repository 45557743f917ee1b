#include <doctest.h>

#include <cmath>
#include <set>

#include "dense_reference.hpp"
#include "osslab/gf2.hpp"
#include "osslab/sim.hpp"

using namespace osslab;
using namespace osslab::sim;

namespace {

constexpr double kTol = 1e-10;

RegisterLayout three_regs() {
  RegisterLayout l;
  l.add("a", 2).add("b", 3).add("c", 1);
  return l;
}

SparseState random_sparse(const RegisterLayout& layout, Rng& rng, int support) {
  std::vector<std::pair<Label, Amplitude>> amps;
  std::set<Label> used;
  while (static_cast<int>(amps.size()) < support) {
    const Label l = rng.bits(layout.total_width());
    if (!used.insert(l).second) continue;
    amps.emplace_back(l, Amplitude(rng.uniform01() - 0.5, rng.uniform01() - 0.5));
  }
  return SparseState::from_amplitudes(layout, amps);
}

oracles::OraclePtr identity_oracle(int width) {
  return oracles::make_oracle("id", width, width, [](std::uint64_t x) { return x; });
}

}  // namespace

TEST_CASE("layout rules") {
  RegisterLayout l = three_regs();
  CHECK(l.total_width() == 6);
  CHECK(l.find("b").offset == 2);
  CHECK(l.find("b[1]").offset == 3);
  CHECK(l.find("b[1:3]").width == 2);
  CHECK_THROWS_AS(l.add("a", 1), ParameterError);
  CHECK_THROWS_AS(l.add("z", 0), ParameterError);
  CHECK_THROWS_AS(l.find("zz"), ParameterError);
  CHECK_THROWS_AS(l.find("b[3]"), ParameterError);
  CHECK_THROWS_AS(l.find("b[2:2]"), ParameterError);
  l.alias("ab", {"a", "b"});
  CHECK(l.find("ab").width == 5);
  CHECK_THROWS_AS(l.alias("ac", {"a", "c"}), ParameterError);
  RegisterLayout wide;
  wide.add("x", 60);
  CHECK_THROWS_AS(wide.add("y", 5), ParameterError);
}

TEST_CASE("init_state") {
  const SparseState s = init_state(three_regs());
  CHECK(s.support_size() == 1);
  CHECK(s.entries()[0].label == 0);
  CHECK(std::abs(s.entries()[0].amp - 1.0) < kTol);
  CHECK(std::abs(s.norm_squared() - 1.0) < kTol);
}

TEST_CASE("apply_hadamard examples") {
  RegisterLayout l;
  l.add("q", 2);
  SUBCASE("|00> becomes uniform") {
    SparseState s(l);
    s.apply_hadamard("q");
    REQUIRE(s.support_size() == 4);
    for (const auto& e : s.entries()) CHECK(std::abs(e.amp - 0.5) < kTol);
  }
  SUBCASE("Bell-type state is invariant") {
    const double h = M_SQRT1_2;
    SparseState s = SparseState::from_amplitudes(l, {{0b00, h}, {0b11, h}});
    s.apply_hadamard("q");
    CHECK(s.support_size() == 2);
    CHECK(std::abs(s.amplitude(0b00) - h) < kTol);
    CHECK(std::abs(s.amplitude(0b11) - h) < kTol);
  }
  SUBCASE("coset state maps to the phased dual") {
    const double h = M_SQRT1_2;
    // Coset {01, 10} of S = {00, 11}.
    SparseState s = SparseState::from_amplitudes(
        l, {{parse_bits("01"), h}, {parse_bits("10"), h}});
    s.apply_hadamard("q");
    CHECK(s.support_size() == 2);
    CHECK(std::abs(s.amplitude(parse_bits("00")) - h) < kTol);
    CHECK(std::abs(s.amplitude(parse_bits("11")) + h) < kTol);
  }
}

TEST_CASE("Hadamard agrees with the dense reference") {
  Rng rng(101);
  RegisterLayout l;
  l.add("a", 1).add("b", 3).add("c", 4).add("d", 2);
  for (int trial = 0; trial < 100; ++trial) {
    SparseState s = random_sparse(l, rng, 1 + static_cast<int>(rng.below(12)));
    testing::DenseState d = testing::DenseState::from(s);
    for (const char* reg : {"a", "b", "c", "d"}) {
      s.apply_hadamard(reg);
      d.hadamard(l.find(reg));
    }
    // And one controlled transform.
    s.apply_hadamard("c", Control::when("a", 1));
    d.hadamard(l.find("c"), l.find("a").mask(), l.find("a").mask());
    CHECK(d.max_deviation(s) < kTol);
    CHECK(std::abs(s.norm_squared() - 1.0) < 1e-9);
  }
}

TEST_CASE("coset and dual identity for rows up to 6") {
  Rng rng(103);
  for (int trial = 0; trial < 60; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(6));
    const int cols = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(rows)));
    const gf2::Matrix a = gf2::sample_full_column_rank(rows, cols, rng);
    const gf2::Vector b(rows, rng.bits(rows));
    RegisterLayout l;
    l.add("key", rows);
    std::vector<std::pair<Label, Amplitude>> amps;
    for (const auto& v : gf2::enumerate_coset(a, b)) amps.emplace_back(v.bits(), 1.0);
    SparseState s = SparseState::from_amplitudes(l, amps);
    s.apply_hadamard("key");

    std::vector<std::pair<Label, Amplitude>> expected;
    for (const auto& w : gf2::dual_basis(a).elements()) {
      expected.emplace_back(w.bits(), dot(b, w) ? -1.0 : 1.0);
    }
    const SparseState want = SparseState::from_amplitudes(l, expected);
    CHECK(s.support_size() == want.support_size());
    CHECK(std::abs(overlap(want, s) - 1.0) < kTol);
  }
}

TEST_CASE("apply_x") {
  RegisterLayout l;
  l.add("q", 1).add("r", 3);
  SparseState s(l);
  s.apply_x("q");
  CHECK(s.entries()[0].label == 1);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    SparseState t = random_sparse(l, rng, 5);
    const SparseState before = t;
    t.apply_x("r", 0b101);
    CHECK(std::abs(t.norm_squared() - 1.0) < 1e-9);
    t.apply_x("r", 0b101);
    CHECK(std::abs(overlap(before, t) - 1.0) < kTol);
  }
}

TEST_CASE("apply_oracle_xor") {
  RegisterLayout l;
  l.add("x", 3).add("y", 3);
  const OracleBinding id{identity_oracle(3), {"x"}, "y"};
  SparseState s(l);
  s.apply_hadamard("x");
  s.apply_oracle_xor(id);
  CHECK(s.support_size() == 8);
  for (const auto& e : s.entries()) CHECK(l.find("x").read(e.label) == l.find("y").read(e.label));
  s.apply_oracle_xor(id);
  CHECK(s.probability("y", 0) == doctest::Approx(1.0));

  SUBCASE("width mismatch") {
    RegisterLayout m;
    m.add("x", 2).add("y", 3);
    SparseState t(m);
    CHECK_THROWS_AS(t.apply_oracle_xor({identity_oracle(3), {"x"}, "y"}), ParameterError);
    CHECK_THROWS_AS(t.apply_oracle_xor({identity_oracle(3), {"y"}, "y"}), ParameterError);
  }
}

TEST_CASE("controlled operations") {
  RegisterLayout l;
  l.add("c", 1).add("t", 1);
  Rng rng(9);
  SUBCASE("always-false and always-true predicates") {
    RegisterLayout m;
    m.add("t", 2).add("u", 2);
    RegisterLayout wide = m;
    wide.add("zero", 1);
    for (int i = 0; i < 10; ++i) {
      const SparseState s = random_sparse(m, rng, 4).embedded_in(wide);
      SparseState never = s;
      never.apply_hadamard("t", Control::when("zero", 1));
      CHECK(std::abs(overlap(s, never) - 1.0) < kTol);
      SparseState always = s;
      always.apply_hadamard("t", Control::when("zero", 0));
      SparseState plain = s;
      plain.apply_hadamard("t");
      CHECK(std::abs(overlap(plain, always) - 1.0) < kTol);
    }
  }
  SUBCASE("controlled X on |+>|0> entangles") {
    SparseState s(l);
    s.apply_hadamard("c");
    s.apply_x("t", 1, Control::when("c", 1));
    CHECK(s.support_size() == 2);
    CHECK(std::abs(s.amplitude(0b00) - M_SQRT1_2) < kTol);
    CHECK(std::abs(s.amplitude(0b11) - M_SQRT1_2) < kTol);
  }
  SUBCASE("overlap between predicate and target is refused") {
    SparseState s(l);
    CHECK_THROWS_AS(s.apply_hadamard("t", Control::when("t", 0)), ParameterError);
    CHECK_THROWS_AS(s.apply_x("t", 1, Control::when("t", 0)), ParameterError);
    CHECK_THROWS_AS(s.apply_oracle_xor({identity_oracle(1), {"c"}, "t"}, Control::when("t", 0)),
                    ParameterError);
  }
}

TEST_CASE("measure") {
  RegisterLayout l;
  l.add("a", 2).add("b", 1);
  SUBCASE("basis state") {
    SparseState s(l);
    s.apply_x("a", 0b10);
    Rng rng(1);
    CHECK(s.measure("a", rng) == 0b10);
    CHECK(s.support_size() == 1);
  }
  SUBCASE("uniform bit frequencies") {
    Rng rng(2);
    int ones = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      SparseState s(l);
      s.apply_hadamard("b");
      ones += static_cast<int>(s.measure("b", rng));
      CHECK(std::abs(s.norm_squared() - 1.0) < 1e-9);
    }
    CHECK(std::abs(ones - trials / 2.0) < 3 * std::sqrt(trials * 0.25));
  }
  SUBCASE("collapse keeps correlations") {
    Rng rng(3);
    SparseState s(l);
    s.apply_hadamard("b");
    s.apply_x("a", 0b11, Control::when("b", 1));
    const auto b = s.measure("b", rng);
    CHECK(s.probability("a", b ? 0b11 : 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("overlap and probability") {
  RegisterLayout l;
  l.add("k", 2);
  SparseState a(l);
  CHECK(std::abs(overlap(a, a) - 1.0) < kTol);
  SparseState b(l);
  b.apply_x("k", 1);
  CHECK(std::abs(overlap(a, b)) < kTol);

  const double h = M_SQRT1_2;
  // ColSpan{10} + 00 is |+>|0>; its image |0>|+> overlaps it by 1/2.
  SparseState coset = SparseState::from_amplitudes(l, {{parse_bits("00"), h}, {parse_bits("10"), h}});
  SparseState image = coset;
  image.apply_hadamard("k");
  CHECK(std::abs(std::abs(overlap(coset, image)) - 0.5) < kTol);

  SparseState u(l);
  u.apply_hadamard("k");
  for (std::uint64_t v = 0; v < 4; ++v) CHECK(u.probability("k", v) == doctest::Approx(0.25));
  CHECK(a.probability("k", 0) == doctest::Approx(1.0));

  RegisterLayout other;
  other.add("j", 2);
  CHECK_THROWS_AS(overlap(a, SparseState(other)), ParameterError);
}

TEST_CASE("apply_inverse") {
  RegisterLayout l;
  l.add("a", 3).add("b", 3).add("c", 1);
  Rng rng(13);
  const std::vector<Operation> seq{
      ops::hadamard("a"),
      ops::oracle_xor({identity_oracle(3), {"a"}, "b"}, Control::when("c", 1)),
      ops::flip("c"),
      ops::hadamard("b", Control::when("c", 0)),
      ops::swap("a", "b"),
  };
  for (int i = 0; i < 50; ++i) {
    SparseState s = random_sparse(l, rng, 6);
    const SparseState before = s;
    s.apply(seq);
    s.apply_inverse(seq);
    CHECK(std::abs(overlap(before, s) - 1.0) < 1e-9);
  }
  SparseState s(l);
  std::vector<Operation> with_measure{ops::hadamard("a"), ops::measure("a")};
  CHECK_THROWS_AS(s.apply_inverse(with_measure), ParameterError);
  CHECK_THROWS_AS(s.apply(ops::measure("a")), ParameterError);
}

TEST_CASE("support cap") {
  RegisterLayout l;
  l.add("q", 10);
  SparseState s(l, 100);
  CHECK_THROWS_AS(s.apply_hadamard("q"), ResourceError);
}

TEST_CASE("embed, extract and project") {
  RegisterLayout small;
  small.add("k", 2);
  RegisterLayout big;
  big.add("x", 1).add("k", 2).add("y", 3);
  SparseState s(small);
  s.apply_hadamard("k");
  SparseState e = s.embedded_in(big);
  CHECK(e.support_size() == 4);
  CHECK(e.probability("y", 0) == doctest::Approx(1.0));
  e.apply_x("y", 0b101);
  const SparseState back = e.extract({{"k", "k"}});
  CHECK(std::abs(overlap(back, s) - 1.0) < kTol);

  const Projection pass = e.project_onto(s);
  CHECK(pass.probability == doctest::Approx(1.0));
  CHECK(pass.remainder.probability("y", 0b101) == doctest::Approx(1.0));

  SparseState zero(small);
  const Projection partial = e.project_onto(zero);
  CHECK(partial.probability == doctest::Approx(0.25));

  // Entangled registers cannot be extracted.
  SparseState ent(big);
  ent.apply_hadamard("x");
  ent.apply_x("k", 1, Control::when("x", 1));
  CHECK_THROWS_AS(ent.extract({{"k", "k"}}), ParameterError);
}

TEST_CASE("determinism and dump") {
  RegisterLayout l;
  l.add("a", 3).add("b", 2);
  auto run = [&] {
    Rng rng(77);
    SparseState s(l);
    s.apply_hadamard("a");
    s.apply_hadamard("b");
    std::vector<std::uint64_t> outs{s.measure("a[0]", rng), s.measure("b", rng)};
    return std::make_pair(outs, s.dump());
  };
  CHECK(run() == run());
  SparseState s(l);
  s.apply_x("a", 0b001);
  CHECK(s.dump() == "a=100|b=00: 1,0\n");
}

TEST_CASE("inverse, tensor and gate cancellation") {
  RegisterLayout l;
  l.add("a", 2).add("b", 2).add("c", 1);
  const std::vector<Operation> seq{ops::hadamard("a"), ops::flip("b", 1, Control::when("a", 3)),
                                   ops::swap("a", "b")};
  SparseState s(l);
  s.apply(seq);
  s.apply(inverse(seq));
  CHECK(s.amplitude(0).real() == doctest::Approx(1.0));
  CHECK_THROWS_AS(inverse(std::vector<Operation>{ops::measure("a")}), ParameterError);

  SUBCASE("tensor") {
    RegisterLayout la;
    la.add("a", 2);
    RegisterLayout lc;
    lc.add("c", 1);
    SparseState a(la);
    a.apply_hadamard("a");
    SparseState c(lc);
    c.apply_x("c");
    const SparseState t = tensor(a, c, l);
    CHECK(t.support_size() == 4);
    CHECK(t.probability("c", 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(tensor(a, a, l), ParameterError);
  }
  SUBCASE("cancellation commutes past disjoint gates only") {
    const std::vector<Operation> pair{ops::hadamard("a"), ops::flip("c"), ops::hadamard("a")};
    CHECK(cancel_inverse_pairs(pair, l).size() == 1);
    const std::vector<Operation> blocked{ops::hadamard("a"), ops::flip("b", 1, Control::when("a", 1)),
                                         ops::hadamard("a")};
    CHECK(cancel_inverse_pairs(blocked, l).size() == 3);
    const std::vector<Operation> nested{ops::flip("a", 1), ops::hadamard("b"), ops::hadamard("b"),
                                        ops::flip("a", 1)};
    CHECK(cancel_inverse_pairs(nested, l).empty());
    const std::vector<Operation> barrier{ops::flip("a"), ops::measure("c"), ops::flip("a")};
    CHECK(cancel_inverse_pairs(barrier, l).size() == 3);
    CHECK(footprint(ops::swap("a", "b", Control::when("c", 1)), l) == 0b11111);
  }
}

TEST_CASE("H, oracle, H sequences match gate-by-gate application") {
  // The sequence form of apply() handles H(R) O H(R) in one step; applying
  // the three operations one at a time must give the same state.
  Rng rng(404);
  RegisterLayout l;
  l.add("ctl", 1).add("key", 4).add("vk", 2).add("mark", 2).add("junk", 3);
  const auto f = oracles::make_oracle("f", 6, 2, [](std::uint64_t x) {
    return static_cast<std::uint64_t>((x * 0x2545f4914f6cdd1dULL) >> 62);
  });
  const OracleBinding binding{f, {"key", "vk"}, "mark"};
  for (int trial = 0; trial < 60; ++trial) {
    // Supports large enough to take the radix-grouping path as well.
    const int support = trial % 3 == 0 ? 600 : 1 + static_cast<int>(rng.below(40));
    const SparseState start = random_sparse(l, rng, support);
    const Control control = trial % 2 == 0 ? Control() : Control::when("ctl", 1);
    const std::vector<Operation> seq{ops::hadamard("key", control),
                                     ops::oracle_xor(binding, control),
                                     ops::hadamard("key", control)};
    SparseState fused = start;
    fused.apply(seq);
    SparseState stepwise = start;
    for (const Operation& op : seq) stepwise.apply(op);
    CHECK(std::abs(1.0 - std::norm(overlap(fused, stepwise))) < 1e-12);
    CHECK(fused.support_size() == stepwise.support_size());

    SparseState back = fused;
    back.apply_inverse(seq);
    CHECK(std::abs(1.0 - std::norm(overlap(back, start))) < 1e-12);
  }
}
