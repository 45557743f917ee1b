#pragma once

// Sparse pure-state simulator over named bit registers.
//
// A basis label is one 64-bit word; each register owns a contiguous bit range
// of it. Amplitudes are stored as an unordered list of (label, amplitude)
// entries with unique labels. Permutation gates (bit flips, swaps, oracle XOR
// queries) rewrite labels in place; the Walsh-Hadamard transform groups the
// entries that agree outside the target register and transforms each group
// densely.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "osslab/classical_oracle.hpp"
#include "osslab/common.hpp"
#include "osslab/random.hpp"

namespace osslab::sim {

using Label = std::uint64_t;
using Amplitude = std::complex<double>;

/// Entries with |amp| below this are dropped after a Hadamard.
inline constexpr double kPruneThreshold = 1e-12;
inline constexpr std::size_t kDefaultSupportCap = std::size_t{1} << 22;
inline constexpr int kMaxLayoutWidth = 64;

/// A resolved contiguous bit range inside a label.
struct RegisterRef {
  int offset = 0;
  int width = 0;

  std::uint64_t mask() const { return low_mask(width) << offset; }
  std::uint64_t read(Label label) const { return (label >> offset) & low_mask(width); }
  Label write(Label label, std::uint64_t value) const {
    return (label & ~mask()) | ((value & low_mask(width)) << offset);
  }
};

struct Register {
  std::string name;
  int offset = 0;
  int width = 0;

  friend bool operator==(const Register&, const Register&) = default;
};

/// Ordered registers; offsets are prefix sums of widths.
///
/// Besides base registers, a layout can carry aliases: a name for a run of
/// consecutive base registers (e.g. "key" spanning "key.lo" and "key.hi").
/// Lookups accept slices: "name[i]" is bit i, "name[a:b]" bits a..b-1.
class RegisterLayout {
 public:
  RegisterLayout() = default;

  RegisterLayout& add(std::string name, int width);
  RegisterLayout& alias(std::string name, const std::vector<std::string>& parts);

  RegisterRef find(std::string_view spec) const;
  bool has(std::string_view name) const;

  int total_width() const { return total_width_; }
  const std::vector<Register>& registers() const { return registers_; }
  const std::vector<Register>& aliases() const { return aliases_; }

  friend bool operator==(const RegisterLayout&, const RegisterLayout&) = default;

 private:
  const Register* lookup(std::string_view name) const;

  std::vector<Register> registers_;
  std::vector<Register> aliases_;
  int total_width_ = 0;
};

/// Conjunction of "register == value" tests. An empty control is always true.
class Control {
 public:
  Control() = default;

  Control& require(std::string reg, std::uint64_t value) {
    tests_.emplace_back(std::move(reg), value);
    return *this;
  }
  static Control when(std::string reg, std::uint64_t value) {
    return Control().require(std::move(reg), value);
  }

  bool empty() const { return tests_.empty(); }
  const std::vector<std::pair<std::string, std::uint64_t>>& tests() const { return tests_; }

  /// (mask, value) such that a label satisfies the control iff
  /// (label & mask) == value.
  std::pair<std::uint64_t, std::uint64_t> resolve(const RegisterLayout& layout) const;

 private:
  std::vector<std::pair<std::string, std::uint64_t>> tests_;
};

/// Query execution unitary |x>|z> -> |x>|z xor O(x)>.
struct OracleBinding {
  oracles::OraclePtr oracle;
  std::vector<std::string> inputs;  // concatenated, first in the low bits
  std::string output;
};

struct Hadamard {
  std::string reg;
};
/// X on the selected bits of a register (all bits by default).
struct FlipBits {
  std::string reg;
  std::uint64_t bits = ~std::uint64_t{0};
};
struct Swap {
  std::string a;
  std::string b;
};
struct OracleXor {
  OracleBinding binding;
};
struct Measure {
  std::string reg;
};

using Gate = std::variant<Hadamard, FlipBits, Swap, OracleXor, Measure>;

/// A gate, optionally controlled. The control may only read registers the
/// gate does not write, which keeps every controlled gate unitary.
struct Operation {
  Gate gate;
  Control control;
};

namespace ops {
Operation hadamard(std::string reg, Control control = {});
Operation flip(std::string reg, std::uint64_t bits = ~std::uint64_t{0}, Control control = {});
Operation swap(std::string a, std::string b, Control control = {});
Operation oracle_xor(OracleBinding binding, Control control = {});
Operation measure(std::string reg);
}  // namespace ops

std::string describe(const Operation& op);

/// The reversed sequence. Every gate here is self-inverse, so reversing is
/// enough. Throws ParameterError on a measurement.
std::vector<Operation> inverse(std::span<const Operation> sequence);

/// Register bits an operation reads or writes, controls included.
std::uint64_t footprint(const Operation& op, const RegisterLayout& layout);

/// Removes pairs of identical gates that meet once the gates between them,
/// all acting on disjoint bits, are commuted out of the way. The result is
/// the same unitary. Measurements are barriers.
std::vector<Operation> cancel_inverse_pairs(std::span<const Operation> sequence,
                                            const RegisterLayout& layout);

struct Projection;

class SparseState {
 public:
  struct Entry {
    Label label;
    Amplitude amp;
  };

  /// |0...0> over the layout.
  explicit SparseState(RegisterLayout layout, std::size_t support_cap = kDefaultSupportCap);

  /// Builds a state from explicit amplitudes (labels must be distinct).
  static SparseState from_amplitudes(RegisterLayout layout,
                                     const std::vector<std::pair<Label, Amplitude>>& amps,
                                     bool normalize = true);

  const RegisterLayout& layout() const { return layout_; }
  std::size_t support_size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t support_cap() const { return cap_; }
  void set_support_cap(std::size_t cap) { cap_ = cap; }

  double norm_squared() const;
  Amplitude amplitude(Label label) const;

  void apply(const Operation& op);
  void apply(std::span<const Operation> sequence);
  /// Applies the sequence backwards; every supported gate is its own inverse.
  /// Throws ParameterError if the sequence contains a measurement.
  void apply_inverse(std::span<const Operation> sequence);

  void apply_hadamard(std::string_view reg, const Control& control = {});
  void apply_x(std::string_view reg, std::uint64_t bits = ~std::uint64_t{0},
               const Control& control = {});
  void apply_swap(std::string_view a, std::string_view b, const Control& control = {});
  void apply_oracle_xor(const OracleBinding& binding, const Control& control = {});

  /// Born-rule measurement of a register; collapses and renormalizes.
  /// Consumes exactly one draw from rng.
  std::uint64_t measure(std::string_view reg, Rng& rng);

  /// Probability that the register holds `value`.
  double probability(std::string_view reg, std::uint64_t value) const;
  /// Probability that the control predicate holds.
  double probability(const Control& control) const;

  /// Outcome distribution of measuring several registers at once, keyed by
  /// the concatenated outcome (first register in the low bits), sorted.
  std::vector<std::pair<std::uint64_t, double>> distribution(
      const std::vector<std::string>& regs) const;

  /// Copies the state into a wider layout. Every base register of this
  /// layout must exist in `target` with the same width; the rest start at 0.
  SparseState embedded_in(const RegisterLayout& target) const;

  /// Reduces to the named registers, which must hold a constant value
  /// everywhere else (i.e. the state is a product with a basis state).
  /// Each pair is (register in this layout, name in the new layout).
  SparseState extract(const std::vector<std::pair<std::string, std::string>>& regs) const;

  /// Binary projective measurement onto `part` (whose registers are matched
  /// by name), returning the pass probability and the post-pass state.
  Projection project_onto(const SparseState& part) const;

  /// One line per basis label, "reg=bits|reg=bits: re,im", sorted.
  std::string dump() const;

 private:
  void hadamard_impl(RegisterRef reg, std::uint64_t cmask, std::uint64_t cval);
  /// H(R) then an oracle XOR then H(R), all under one control, applied per
  /// group without building the intermediate state. Returns false (having
  /// done nothing) when the three operations do not have that shape.
  bool apply_conjugated_oracle(const Operation& first, const Operation& middle,
                               const Operation& last);
  template <typename Map>
  void permute(std::uint64_t cmask, std::uint64_t cval, Map&& map);
  void check_cap() const;

  RegisterLayout layout_;
  std::vector<Entry> entries_;
  std::size_t cap_;
};

struct Projection {
  double probability;
  SparseState remainder;  // normalized; projected registers reset to 0
};

SparseState init_state(RegisterLayout layout);

/// a (x) b placed into `target`, which must contain the base registers of
/// both under the same names. The two states may not share a register.
SparseState tensor(const SparseState& a, const SparseState& b, const RegisterLayout& target);

/// <a|b>. Layouts must be identical.
Amplitude overlap(const SparseState& a, const SparseState& b);

/// |<a|b>|^2.
double fidelity(const SparseState& a, const SparseState& b);

}  // namespace osslab::sim
