#pragma once

// Key-fire for signing: setup, signing through rewound attestations,
// verification, and the attestation-unlocked clone.
//
// Clone layout, low to high (61 bits at the defaults):
//
//   f.*  flame workspace        msg(1)   s.flag(jmax) s.mark(jmax)
//   ora4(1+att)  ora5(1+att)    c.*  clone workspace
//
// The source copy is only read through f.vk and f.key, so a source may also
// be a compact pair of registers <prefix>vk and <prefix>key, as in chains.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osslab/oss.hpp"

namespace osslab::keyfire {

using oracles::KeyFireInstance;
using oracles::KeyFireParams;
using oss::SignMode;

inline constexpr const char* kFlamePrefix = "f.";
inline constexpr const char* kClonePrefix = "c.";
inline constexpr const char* kSignPrefix = "s.";
inline constexpr const char* kMsg = "msg";
inline constexpr const char* kOra4 = "ora4";
inline constexpr const char* kOra5 = "ora5";

sim::RegisterLayout clone_layout(const KeyFireParams& p);

struct SetupResult {
  KeyFireInstance instance;
  sim::SparseState flame;  // workspace layout without prefix
};

SetupResult setup(const KeyFireParams& params, Rng& rng);

struct GoodInstance {
  KeyFireInstance instance;
  /// Instances drawn and thrown away before one had only good keys.
  int rejected = 0;
};

/// Draws instances until every verification key is good. Desk-sized
/// parameters put a lot of mass on bad keys, and this is the conditioning
/// the clone experiments declare.
GoodInstance find_good_instance(const KeyFireParams& params, Rng& rng, int max_draws = 10000);

/// Moves a state defined on a workspace with prefix `from` onto the same
/// workspace with prefix `to`. The bit layout is unchanged.
sim::SparseState rename_workspace(const sim::SparseState& state, const oracles::OssParams& p,
                                  const std::string& from, const std::string& to);

struct Attestation {
  std::uint64_t ivk = 0;
  std::uint64_t y0 = 0;  // raw O0 output, 0 means rejected
  std::uint64_t y1 = 0;
};

/// Measures vk, then for b = 0, 1 signs message b coherently, XORs
/// O_b(ivk, sig, z) into a fresh register, unsigns and measures that
/// register. The flame keeps its layout. `prefix` names the workspace
/// inside `flame`.
Attestation attestation_probe(const KeyFireInstance& inst, sim::SparseState& flame,
                              std::uint64_t z, Rng& rng, const std::string& prefix = "",
                              SignMode mode = SignMode::Grover);

struct KfSignature {
  Attestation attestation;
  std::optional<std::uint64_t> signature;  // empty when O3 rejected
};

/// m has nu bits.
KfSignature kf_sign(const KeyFireInstance& inst, sim::SparseState& flame, std::uint64_t m,
                    Rng& rng, const std::string& prefix = "", SignMode mode = SignMode::Grover);

bool kf_verify(const KeyFireInstance& inst, std::uint64_t m, std::uint64_t sig);

/// Registers the attestation dance touches, for a source copy `src` and a
/// GenQKey workspace `dst`.
struct DanceRegisters {
  std::string src = kFlamePrefix;
  std::string dst = kClonePrefix;
  std::string sign_prefix = kSignPrefix;
  std::string msg = kMsg;
  std::string ora4 = kOra4;
  std::string ora5 = kOra5;
};

/// The thirteen steps that stand in for one dispatch query on dst.qin:
/// sign-0, O0, unsign, msg<-1, sign-1, O1, O2, O1, unsign, msg<-0, sign-0,
/// O0, unsign.
std::vector<sim::Operation> attestation_dance_ops(const KeyFireInstance& inst,
                                                  const DanceRegisters& regs,
                                                  SignMode mode = SignMode::Grover);

/// The whole clone loop: t2 rounds of GenQKey work plus the dance, then the
/// selector reset.
std::vector<sim::Operation> clone_ops(const KeyFireInstance& inst, const DanceRegisters& regs,
                                      SignMode mode = SignMode::Grover);

struct CloneResult {
  sim::SparseState state;  // clone layout
  /// Squared overlap with flame (x) zeros (x) flame.
  double fidelity = 0;
  /// Probability that msg, aux2, ora4 and ora5 are all zero.
  double ancilla_zero_weight = 0;
  /// Projective pass probability of each copy onto the ideal flame.
  double source_fidelity = 0;
  double clone_fidelity = 0;
};

/// `flame` is on the unprefixed workspace layout.
CloneResult kf_clone(const KeyFireInstance& inst, const sim::SparseState& flame,
                     SignMode mode = SignMode::Grover);

/// Hands out one copy of a clone-layout state as an unprefixed workspace
/// state. Every other register is measured first, which leaves the copy
/// with exactly its reduced state on average.
sim::SparseState take_copy(const sim::SparseState& state, const oracles::OssParams& p,
                           const std::string& prefix, Rng& rng);

/// 16 t2 2^-jmax.
double clone_budget(const KeyFireParams& p);

struct IterationCheck {
  double overlap_squared = 0;
  double deficit = 0;  // 1 - overlap_squared
};

/// One clone iteration on (ideal flame, zeros, zeta) compared against the
/// flame tensored with the dispatch query applied directly after the same
/// GenQKey round. zeta lives on the workspace layout with prefix "c.".
///
/// The dance never changes c.qin and only XORs into c.qout, so the state
/// splits into slices by the value z of c.qin. The checker runs the dance
/// once per z on flame (x) |z, 0> and reuses it for every zeta and every
/// qout value, which keeps a sweep over many zeta affordable.
class CloneIterationChecker {
 public:
  CloneIterationChecker(KeyFireInstance inst, SignMode mode = SignMode::Grover);

  IterationCheck check(const sim::SparseState& zeta, int round = 0);
  std::size_t slices_simulated() const { return slices_.size(); }

 private:
  struct Slice;
  const Slice& slice(std::uint64_t z);

  KeyFireInstance inst_;
  SignMode mode_;
  sim::RegisterLayout layout_;
  std::vector<sim::Operation> dance_;
  std::size_t shared_prefix_ = 0;  // leading dance ops that ignore z
  std::optional<sim::SparseState> after_prefix_;
  std::vector<std::pair<std::uint64_t, std::shared_ptr<const Slice>>> slices_;
};

IterationCheck clone_iteration_check(const KeyFireInstance& inst, const sim::SparseState& zeta,
                                     int round = 0, SignMode mode = SignMode::Grover);

/// The same comparison done on the full tensor product state at once.
/// Only feasible for small zeta or small jmax; used to cross-check.
IterationCheck clone_iteration_check_direct(const KeyFireInstance& inst,
                                            const sim::SparseState& zeta, int round = 0,
                                            SignMode mode = SignMode::Grover);

/// A normalized random state on the "c." workspace with `support` labels.
sim::SparseState random_workspace_state(const oracles::OssParams& p, int support, Rng& rng);

struct ChainResult {
  /// Pass probability of the projective flame check on copy i, i = 0..depth,
  /// each conditioned on the checks before it having passed.
  std::vector<double> copy_fidelity;
  /// Probability, between clones, that the ancillas and the spent parts of
  /// the clone workspace are zero (again conditional).
  std::vector<double> ancilla_zero;
  /// Product of all of the above: a lower bound on the probability that
  /// every copy passes, since projecting the ancillas onto zero only
  /// discards outcomes.
  double joint_lower_bound = 0;
  double threshold = 0;  // 1 - (2 depth - 1) budget
  bool passed = false;
};

/// Clones the newest copy `depth` times. After copy i has served as the
/// source it is never touched again, so its check is done right away and
/// the passing branch, a product state, is dropped from the simulation.
ChainResult clone_chain(const KeyFireInstance& inst, int depth, SignMode mode = SignMode::Grover);

/// The flame without prefix, compacted to registers <prefix>vk, <prefix>key.
sim::SparseState compact_flame(const oracles::OssInstance& inst, const std::string& prefix);

}  // namespace osslab::keyfire
