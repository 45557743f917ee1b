#include "osslab/gf2.hpp"

#include <algorithm>
#include <bit>

namespace osslab::gf2 {
namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw DimensionError("GF(2) dimension must be in [1, 64], got " + std::to_string(dim));
  }
}

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

int pivot_of(std::uint64_t bits) { return 63 - std::countl_zero(bits); }

void check_enumerable(int dim) {
  if (dim >= 64 || (std::uint64_t{1} << dim) > kEnumerationLimit) {
    throw ResourceError("enumeration of 2^" + std::to_string(dim) +
                        " elements exceeds the 2^20 guard");
  }
}

}  // namespace

Vector::Vector(int dim, std::uint64_t bits) : dim_(dim), bits_(bits) {
  check_dim(dim);
  if ((bits & ~low_mask(dim)) != 0) {
    throw DimensionError("vector bits exceed dimension " + std::to_string(dim));
  }
}

Vector Vector::from_string(std::string_view entries) {
  return Vector(static_cast<int>(entries.size()), parse_bits(std::string(entries)));
}

Vector Vector::unit(int dim, int index) {
  if (index < 0 || index >= dim) throw DimensionError("unit vector index out of range");
  return Vector(dim, std::uint64_t{1} << index);
}

void Vector::set(int i, bool value) {
  if (i < 0 || i >= dim_) throw DimensionError("vector index out of range");
  const std::uint64_t m = std::uint64_t{1} << i;
  bits_ = value ? (bits_ | m) : (bits_ & ~m);
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(dim_, other.dim_, "vector addition");
  bits_ ^= other.bits_;
  return *this;
}

bool dot(const Vector& a, const Vector& b) {
  require_same_dim(a.dim_, b.dim_, "inner product");
  return (std::popcount(a.bits_ & b.bits_) & 1) != 0;
}

Matrix::Matrix(int rows, int cols) : rows_(rows) {
  check_dim(rows);
  if (cols < 0 || cols > kMaxDim) throw DimensionError("matrix column count out of range");
  columns_.assign(static_cast<std::size_t>(cols), Vector(rows));
}

Matrix Matrix::from_columns(int rows, const std::vector<Vector>& columns) {
  Matrix m(rows, static_cast<int>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    require_same_dim(rows, columns[j].dim(), "matrix column");
    m.columns_[j] = columns[j];
  }
  return m;
}

Matrix Matrix::identity(int dim) {
  std::vector<Vector> cols;
  for (int j = 0; j < dim; ++j) cols.push_back(Vector::unit(dim, j));
  return from_columns(dim, cols);
}

Vector Matrix::operator*(const Vector& z) const {
  require_same_dim(cols(), z.dim(), "matrix-vector product");
  std::uint64_t acc = 0;
  for (int j = 0; j < cols(); ++j) {
    if (z[j]) acc ^= columns_[static_cast<std::size_t>(j)].bits();
  }
  return Vector(rows_, acc);
}

Vector Matrix::transpose_times(const Vector& v) const {
  require_same_dim(rows_, v.dim(), "v^T A");
  std::uint64_t acc = 0;
  for (int j = 0; j < cols(); ++j) {
    if (dot(v, columns_[static_cast<std::size_t>(j)])) acc |= std::uint64_t{1} << j;
  }
  return Vector(std::max(cols(), 1), acc);
}

Subspace::Subspace(int ambient_dim, std::vector<Vector> basis)
    : ambient_(ambient_dim), basis_(std::move(basis)) {
  check_dim(ambient_dim);
  if (static_cast<int>(basis_.size()) > ambient_dim) {
    throw DimensionError("more basis vectors than the ambient dimension");
  }
  for (const Vector& v : basis_) {
    require_same_dim(ambient_, v.dim(), "subspace basis");
    std::uint64_t r = reduce(v.bits());
    if (r == 0) throw ParameterError("subspace basis vectors are linearly dependent");
    const std::uint64_t pivot = std::uint64_t{1} << pivot_of(r);
    for (Vector& e : echelon_) {
      if (e.bits() & pivot) e = Vector(ambient_, e.bits() ^ r);
    }
    echelon_.emplace_back(ambient_, r);
  }
  std::sort(echelon_.begin(), echelon_.end());
}

Subspace Subspace::whole(int ambient_dim) {
  std::vector<Vector> basis;
  for (int i = 0; i < ambient_dim; ++i) basis.push_back(Vector::unit(ambient_dim, i));
  return Subspace(ambient_dim, std::move(basis));
}

Subspace Subspace::span(int ambient_dim, const std::vector<Vector>& generators) {
  Subspace s = zero(ambient_dim);
  std::vector<Vector> basis;
  for (const Vector& g : generators) {
    if (!s.contains(g)) {
      basis.push_back(g);
      s = Subspace(ambient_dim, basis);
    }
  }
  return s;
}

std::uint64_t Subspace::reduce(std::uint64_t bits) const {
  // The echelon form is fully reduced, so the order of elimination is irrelevant.
  for (const Vector& e : echelon_) {
    if (bits & (std::uint64_t{1} << pivot_of(e.bits()))) bits ^= e.bits();
  }
  return bits;
}

bool Subspace::contains(const Vector& v) const {
  require_same_dim(ambient_, v.dim(), "subspace membership");
  return reduce(v.bits()) == 0;
}

bool Subspace::contains(const Subspace& other) const {
  require_same_dim(ambient_, other.ambient_, "subspace containment");
  return std::all_of(other.basis_.begin(), other.basis_.end(),
                     [&](const Vector& v) { return contains(v); });
}

std::vector<Vector> Subspace::elements() const {
  check_enumerable(dim());
  std::vector<Vector> out;
  const std::uint64_t count = std::uint64_t{1} << dim();
  out.reserve(count);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    std::uint64_t acc = 0;
    for (int j = 0; j < dim(); ++j) {
      if (bit_at(idx, j)) acc ^= basis_[static_cast<std::size_t>(j)].bits();
    }
    out.emplace_back(ambient_, acc);
  }
  return out;
}

Subspace Subspace::orthogonal_complement() const {
  std::uint64_t pivots = 0;
  for (const Vector& e : echelon_) pivots |= std::uint64_t{1} << pivot_of(e.bits());
  std::vector<Vector> basis;
  for (int f = 0; f < ambient_; ++f) {
    if (bit_at(pivots, f)) continue;
    std::uint64_t w = std::uint64_t{1} << f;
    for (const Vector& e : echelon_) {
      if (e[f]) w |= std::uint64_t{1} << pivot_of(e.bits());
    }
    basis.emplace_back(ambient_, w);
  }
  return Subspace(ambient_, std::move(basis));
}

int rank(const Matrix& a) { return column_span(a).dim(); }

Subspace column_span(const Matrix& a) { return Subspace::span(a.rows(), a.columns()); }

Matrix sample_full_column_rank(int rows, int cols, Rng& rng) {
  check_dim(rows);
  if (cols < 1 || cols > rows) {
    throw ParameterError("full column rank needs 1 <= cols <= rows (rows=" +
                         std::to_string(rows) + ", cols=" + std::to_string(cols) + ")");
  }
  for (;;) {
    std::vector<Vector> columns;
    columns.reserve(static_cast<std::size_t>(cols));
    for (int j = 0; j < cols; ++j) columns.emplace_back(rows, rng.bits(rows));
    Matrix m = Matrix::from_columns(rows, columns);
    if (rank(m) == cols) return m;
  }
}

std::optional<Vector> solve_in_colspan(const Matrix& a, const Vector& v) {
  require_same_dim(a.rows(), v.dim(), "solve_in_colspan");
  // Each pivot row remembers which columns were combined to produce it.
  struct Row {
    std::uint64_t bits;
    std::uint64_t combo;
  };
  std::vector<Row> rows;
  auto eliminate = [&rows](Row r) {
    for (const Row& p : rows) {
      if (r.bits & (std::uint64_t{1} << pivot_of(p.bits))) {
        r.bits ^= p.bits;
        r.combo ^= p.combo;
      }
    }
    return r;
  };
  for (int j = 0; j < a.cols(); ++j) {
    Row r = eliminate({a.column(j).bits(), std::uint64_t{1} << j});
    if (r.bits != 0) rows.push_back(r);
  }
  const Row target = eliminate({v.bits(), 0});
  if (target.bits != 0) return std::nullopt;
  return Vector(std::max(a.cols(), 1), target.combo);
}

bool dual_membership(const Matrix& a, const Vector& v) {
  return a.transpose_times(v).is_zero();
}

Subspace dual_basis(const Matrix& a) { return column_span(a).orthogonal_complement(); }

Subspace sample_superspace(const Subspace& s, int target_dim, Rng& rng) {
  if (target_dim < s.dim() || target_dim > s.ambient_dim()) {
    throw ParameterError("superspace dimension must lie in [dim(S), ambient]");
  }
  std::vector<Vector> basis = s.basis();
  Subspace current = s;
  while (current.dim() < target_dim) {
    Vector candidate(s.ambient_dim(), rng.bits(s.ambient_dim()));
    if (current.contains(candidate)) continue;
    basis.push_back(candidate);
    current = Subspace(s.ambient_dim(), basis);
  }
  return current;
}

Subspace sample_subspace(const Subspace& s, int target_dim, Rng& rng) {
  if (target_dim < 0 || target_dim > s.dim()) {
    throw ParameterError("subspace dimension must lie in [0, dim(S)]");
  }
  std::vector<Vector> basis;
  Subspace current = Subspace::zero(s.ambient_dim());
  while (current.dim() < target_dim) {
    const std::uint64_t coords = rng.bits(s.dim());
    std::uint64_t acc = 0;
    for (int j = 0; j < s.dim(); ++j) {
      if (bit_at(coords, j)) acc ^= s.basis()[static_cast<std::size_t>(j)].bits();
    }
    Vector candidate(s.ambient_dim(), acc);
    if (current.contains(candidate)) continue;
    basis.push_back(candidate);
    current = Subspace(s.ambient_dim(), basis);
  }
  return current;
}

std::vector<Vector> enumerate_coset(const Matrix& a, const Vector& b) {
  require_same_dim(a.rows(), b.dim(), "enumerate_coset");
  check_enumerable(a.cols());
  const std::uint64_t count = std::uint64_t{1} << a.cols();
  std::vector<Vector> out;
  out.reserve(count);
  for (std::uint64_t z = 0; z < count; ++z) {
    out.push_back(a * Vector(std::max(a.cols(), 1), z) + b);
  }
  return out;
}

}  // namespace osslab::gf2
