#pragma once

// Bit-packed linear algebra over GF(2).
//
// Vectors live in a single machine word (dimension <= 64) using the global
// bit convention from common.hpp: entry i is bit i, so the "first bit" of a
// vector is bit 0. Matrices are stored as a list of column vectors.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osslab/common.hpp"
#include "osslab/random.hpp"

namespace osslab::gf2 {

inline constexpr int kMaxDim = 64;

/// Operations that enumerate 2^d elements refuse to run past this many.
inline constexpr std::uint64_t kEnumerationLimit = std::uint64_t{1} << 20;

class Vector {
 public:
  explicit Vector(int dim, std::uint64_t bits = 0);

  /// "101" -> entries (1, 0, 1).
  static Vector from_string(std::string_view entries);
  static Vector unit(int dim, int index);

  int dim() const { return dim_; }
  std::uint64_t bits() const { return bits_; }

  bool operator[](int i) const { return bit_at(bits_, i); }
  void set(int i, bool value);
  bool first() const { return (bits_ & 1U) != 0; }
  bool is_zero() const { return bits_ == 0; }

  Vector& operator+=(const Vector& other);
  friend Vector operator+(Vector a, const Vector& b) { return a += b; }

  /// Inner product over GF(2).
  friend bool dot(const Vector& a, const Vector& b);

  std::string to_string() const { return bit_string(bits_, dim_); }

  friend bool operator==(const Vector&, const Vector&) = default;
  friend std::strong_ordering operator<=>(const Vector&, const Vector&) = default;

 private:
  int dim_;
  std::uint64_t bits_;
};

class Matrix {
 public:
  /// rows x cols zero matrix.
  Matrix(int rows, int cols);
  static Matrix from_columns(int rows, const std::vector<Vector>& columns);
  static Matrix identity(int dim);

  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(columns_.size()); }
  const Vector& column(int j) const { return columns_.at(static_cast<std::size_t>(j)); }
  const std::vector<Vector>& columns() const { return columns_; }

  /// A * z for z in GF(2)^cols.
  Vector operator*(const Vector& z) const;

  /// v^T A, returned as a vector in GF(2)^cols.
  Vector transpose_times(const Vector& v) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_;
  std::vector<Vector> columns_;
};

/// Linear subspace of GF(2)^ambient with an independent basis.
///
/// Alongside the caller-visible basis it keeps a fully reduced echelon form,
/// which gives O(dim) membership tests and a canonical form for equality.
class Subspace {
 public:
  /// Throws if the basis is dependent or has the wrong dimension.
  Subspace(int ambient_dim, std::vector<Vector> basis);

  static Subspace zero(int ambient_dim) { return Subspace(ambient_dim, {}); }
  static Subspace whole(int ambient_dim);
  /// Span of arbitrary (possibly dependent) generators.
  static Subspace span(int ambient_dim, const std::vector<Vector>& generators);

  int ambient_dim() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Vector>& basis() const { return basis_; }

  bool contains(const Vector& v) const;
  bool contains(const Subspace& other) const;

  /// Reduced echelon basis, sorted. Equal subspaces give equal results.
  const std::vector<Vector>& canonical_basis() const { return echelon_; }

  /// All 2^dim members, in order of their coordinate index.
  std::vector<Vector> elements() const;

  /// {v : v . s = 0 for all s in this subspace}.
  Subspace orthogonal_complement() const;

  friend bool operator==(const Subspace& a, const Subspace& b) {
    return a.ambient_ == b.ambient_ && a.echelon_ == b.echelon_;
  }

 private:
  std::uint64_t reduce(std::uint64_t bits) const;

  int ambient_;
  std::vector<Vector> basis_;
  std::vector<Vector> echelon_;
};

int rank(const Matrix& a);

/// Uniform over full-column-rank rows x cols matrices (rejection sampling).
Matrix sample_full_column_rank(int rows, int cols, Rng& rng);

/// Some z with A z = v, or nullopt when v is outside the column span.
/// Unique when A has full column rank.
std::optional<Vector> solve_in_colspan(const Matrix& a, const Vector& v);

/// True iff v^T A = 0.
bool dual_membership(const Matrix& a, const Vector& v);

/// Basis of {v : v^T A = 0}; dimension rows - rank(A).
Subspace dual_basis(const Matrix& a);

Subspace column_span(const Matrix& a);

/// Uniform over superspaces of s with the given dimension.
Subspace sample_superspace(const Subspace& s, int target_dim, Rng& rng);

/// Uniform over subspaces of s with the given dimension.
Subspace sample_subspace(const Subspace& s, int target_dim, Rng& rng);

/// All vectors A z + b, z ranging over GF(2)^cols in increasing order.
std::vector<Vector> enumerate_coset(const Matrix& a, const Vector& b);

}  // namespace osslab::gf2
