#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "osslab/gf2.hpp"

using namespace osslab;
using namespace osslab::gf2;

namespace {

Matrix cols(int rows, std::initializer_list<const char*> columns) {
  std::vector<Vector> v;
  for (const char* c : columns) v.push_back(Vector::from_string(c));
  return Matrix::from_columns(rows, v);
}

std::vector<std::uint64_t> key_of(const Subspace& s) {
  std::vector<std::uint64_t> key;
  for (const auto& v : s.canonical_basis()) key.push_back(v.bits());
  return key;
}

// All subspaces of GF(2)^ambient with the given dimension, by canonical basis.
std::set<std::vector<std::uint64_t>> all_subspaces(int ambient, int dim) {
  std::set<std::vector<std::uint64_t>> out;
  const std::uint64_t count = std::uint64_t{1} << ambient;
  std::vector<std::uint64_t> pick;
  auto rec = [&](auto&& self, std::uint64_t start) -> void {
    if (static_cast<int>(pick.size()) == dim) {
      std::vector<Vector> basis;
      for (auto b : pick) basis.emplace_back(ambient, b);
      if (rank(Matrix::from_columns(ambient, basis)) != dim) return;
      out.insert(key_of(Subspace(ambient, basis)));
      return;
    }
    for (std::uint64_t v = start; v < count; ++v) {
      pick.push_back(v);
      self(self, v + 1);
      pick.pop_back();
    }
  };
  rec(rec, 1);
  return out;
}

}  // namespace

TEST_CASE("vectors reject dimension mismatches") {
  CHECK_THROWS_AS(Vector(0), DimensionError);
  CHECK_THROWS_AS(Vector(65), DimensionError);
  CHECK_THROWS_AS(Vector(2, 0b100), DimensionError);
  CHECK_THROWS_AS(Vector(2) + Vector(3), DimensionError);
  CHECK_THROWS_AS((void)dot(Vector(2), Vector(3)), DimensionError);
  const Vector v = Vector::from_string("101");
  CHECK(v[0]);
  CHECK_FALSE(v[1]);
  CHECK(v.first());
  CHECK(v.to_string() == "101");
}

TEST_CASE("sample_full_column_rank") {
  Rng rng(7);
  SUBCASE("1x1 is forced") {
    const Matrix m = sample_full_column_rank(1, 1, rng);
    CHECK(m.column(0) == Vector::from_string("1"));
  }
  SUBCASE("3x2 has rank 2 for many seeds") {
    for (int i = 0; i < 200; ++i) CHECK(rank(sample_full_column_rank(3, 2, rng)) == 2);
  }
  SUBCASE("more columns than rows is an error") {
    CHECK_THROWS_AS(sample_full_column_rank(2, 3, rng), ParameterError);
    CHECK_THROWS_AS(sample_full_column_rank(2, 0, rng), ParameterError);
  }
  SUBCASE("uniform over the six full-rank 2x2 matrices") {
    std::map<std::pair<std::uint64_t, std::uint64_t>, int> counts;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
      const Matrix m = sample_full_column_rank(2, 2, rng);
      ++counts[{m.column(0).bits(), m.column(1).bits()}];
    }
    CHECK(counts.size() == 6);
    const double p = 1.0 / 6;
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& [_, c] : counts) CHECK(std::abs(c - draws * p) < 4 * sigma);
  }
}

TEST_CASE("solve_in_colspan") {
  const Matrix a = cols(3, {"110", "011"});
  SUBCASE("solvable") {
    const auto z = solve_in_colspan(a, Vector::from_string("101"));
    REQUIRE(z.has_value());
    CHECK(*z == Vector::from_string("11"));
  }
  SUBCASE("not in the span") { CHECK_FALSE(solve_in_colspan(a, Vector::from_string("111"))); }
  SUBCASE("zero vector") {
    const auto z = solve_in_colspan(a, Vector(3));
    REQUIRE(z.has_value());
    CHECK(z->is_zero());
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(solve_in_colspan(a, Vector(4)), DimensionError);
  }
  SUBCASE("round trip for full column rank") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix m = sample_full_column_rank(6, 3, rng);
      for (std::uint64_t z = 0; z < 8; ++z) {
        const auto back = solve_in_colspan(m, m * Vector(3, z));
        REQUIRE(back.has_value());
        CHECK(back->bits() == z);
      }
    }
  }
}

TEST_CASE("dual_membership") {
  const Matrix a = cols(3, {"110"});
  CHECK(dual_membership(a, Vector::from_string("110")));
  CHECK_FALSE(dual_membership(a, Vector::from_string("100")));
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    CHECK(dual_membership(sample_full_column_rank(5, 3, rng), Vector(5)));
  }
  CHECK_THROWS_AS(dual_membership(a, Vector(2)), DimensionError);
}

TEST_CASE("dual_basis") {
  CHECK(dual_basis(Matrix::identity(2)).dim() == 0);
  const Subspace d = dual_basis(cols(3, {"110"}));
  CHECK(d.dim() == 2);
  CHECK(d.contains(Vector::from_string("110")));
  CHECK(d.contains(Vector::from_string("001")));

  Rng rng(5);
  for (int rows = 1; rows <= 8; ++rows) {
    for (int c = 1; c <= rows; ++c) {
      const Matrix a = sample_full_column_rank(rows, c, rng);
      const Subspace dual = dual_basis(a);
      CHECK(dual.dim() == rows - c);
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << rows); ++v) {
        CHECK(dual_membership(a, Vector(rows, v)) == dual.contains(Vector(rows, v)));
      }
    }
  }
}

TEST_CASE("sample_superspace") {
  Rng rng(17);
  SUBCASE("target dimension equal to dim(S) returns S") {
    const Subspace s(4, {Vector::from_string("1100"), Vector::from_string("0010")});
    CHECK(sample_superspace(s, 2, rng) == s);
  }
  SUBCASE("lines of GF(2)^2 are uniform") {
    std::map<std::uint64_t, int> counts;
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
      ++counts[sample_superspace(Subspace::zero(2), 1, rng).canonical_basis()[0].bits()];
    }
    CHECK(counts.size() == 3);
    const double p = 1.0 / 3;
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& [_, c] : counts) CHECK(std::abs(c - draws * p) < 4 * sigma);
  }
  SUBCASE("containment over 1000 draws") {
    const Subspace s(5, {Vector::from_string("10100")});
    for (int i = 0; i < 1000; ++i) {
      const Subspace t = sample_superspace(s, 3, rng);
      CHECK(t.dim() == 3);
      CHECK(t.contains(s));
    }
  }
  SUBCASE("bounds") {
    const Subspace s(3, {Vector::from_string("100"), Vector::from_string("010")});
    CHECK_THROWS_AS(sample_superspace(s, 1, rng), ParameterError);
    CHECK_THROWS_AS(sample_superspace(s, 4, rng), ParameterError);
  }
  SUBCASE("uniform over all superspaces in ambient dimension 4") {
    const Subspace s(4, {Vector::from_string("1001")});
    std::set<std::vector<std::uint64_t>> expected;
    for (const auto& key : all_subspaces(4, 2)) {
      std::vector<Vector> basis;
      for (auto b : key) basis.emplace_back(4, b);
      if (Subspace(4, basis).contains(s)) expected.insert(key);
    }
    REQUIRE(expected.size() == 7);
    std::map<std::vector<std::uint64_t>, int> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[key_of(sample_superspace(s, 2, rng))];
    CHECK(counts.size() == expected.size());
    const double p = 1.0 / static_cast<double>(expected.size());
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& [key, c] : counts) {
      CHECK(expected.count(key) == 1);
      CHECK(std::abs(c - draws * p) < 4 * sigma);
    }
  }
}

TEST_CASE("sample_subspace") {
  Rng rng(23);
  const Subspace full = Subspace::whole(2);
  CHECK(sample_subspace(full, 0, rng) == Subspace::zero(2));
  std::map<std::uint64_t, int> counts;
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    const Subspace t = sample_subspace(full, 1, rng);
    CHECK(full.contains(t));
    ++counts[t.canonical_basis()[0].bits()];
  }
  CHECK(counts.size() == 3);
  const double sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (const auto& [_, c] : counts) CHECK(std::abs(c - draws / 3.0) < 4 * sigma);

  const Subspace s(6, {Vector::from_string("110000"), Vector::from_string("001100"),
                       Vector::from_string("000011")});
  for (int i = 0; i < 200; ++i) CHECK(s.contains(sample_subspace(s, 2, rng)));
  CHECK_THROWS_AS(sample_subspace(s, 4, rng), ParameterError);
}

TEST_CASE("enumerate_coset") {
  SUBCASE("single column") {
    const auto members = enumerate_coset(cols(2, {"11"}), Vector::from_string("01"));
    REQUIRE(members.size() == 2);
    std::set<std::string> got{members[0].to_string(), members[1].to_string()};
    CHECK(got == std::set<std::string>{"01", "10"});
  }
  SUBCASE("identity covers the space") {
    std::set<std::uint64_t> got;
    for (const auto& v : enumerate_coset(Matrix::identity(2), Vector(2))) got.insert(v.bits());
    CHECK(got.size() == 4);
  }
  SUBCASE("size and membership") {
    Rng rng(29);
    for (int i = 0; i < 30; ++i) {
      const Matrix a = sample_full_column_rank(6, 3, rng);
      const Vector b(6, rng.bits(6));
      const auto members = enumerate_coset(a, b);
      CHECK(members.size() == 8);
      CHECK(std::set<Vector>(members.begin(), members.end()).size() == 8);
      for (const auto& v : members) CHECK(solve_in_colspan(a, v + b).has_value());
    }
  }
  SUBCASE("guard") {
    CHECK_THROWS_AS(enumerate_coset(Matrix(30, 21), Vector(30)), ResourceError);
  }
}

TEST_CASE("subspace bookkeeping") {
  CHECK_THROWS_AS(Subspace(3, {Vector::from_string("110"), Vector::from_string("110")}),
                  ParameterError);
  const Subspace s = Subspace::span(3, {Vector::from_string("110"), Vector::from_string("011"),
                                        Vector::from_string("101")});
  CHECK(s.dim() == 2);
  CHECK(s.elements().size() == 4);
  CHECK(s.orthogonal_complement().dim() == 1);
  CHECK(s.orthogonal_complement().contains(Vector::from_string("111")));
  CHECK(s.orthogonal_complement().orthogonal_complement() == s);
}
