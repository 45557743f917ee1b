#pragma once

// One-shot signatures over the sparse simulator: key generation (measured and
// purified), signing (measured and measurement-deferred), verification.
//
// GenQKey workspace. Every workspace is a block of registers sharing a name
// prefix, low to high:
//
//   sel(2) py(r) pvlo(n-r) pvhi(k-n+r) pm(1) | oflag(1) oy(r) ovlo(n-r) ovhi(k-n+r)
//   \------------------ qin ------------------/ \--------------- qout ---------------/
//
// with aliases vk = py, key = pvlo..pvhi, xfield = py..pvlo (the n-bit x).
// The routing below is two dispatch queries: P on x, then P^-1 on (y, v)
// after swapping P's answer into the payload, which clears qout again.

#include <optional>
#include <string>
#include <vector>

#include "osslab/oracles.hpp"
#include "osslab/sim.hpp"

namespace osslab::oss {

using oracles::OssInstance;
using oracles::OssParams;

/// Dispatch queries made by the purified key generation (t2).
inline constexpr int kGenQKeyQueries = 2;

void add_workspace(sim::RegisterLayout& layout, const OssParams& p, const std::string& prefix);
sim::RegisterLayout workspace_layout(const OssParams& p, const std::string& prefix = "");

/// Classical work done before dispatch query number `round` (0 or 1).
std::vector<sim::Operation> genqkey_round(const OssParams& p, const std::string& prefix, int round);
/// U_dispatch with input qin and output qout.
sim::Operation genqkey_query(const OssInstance& inst, const std::string& prefix);
/// Resets the selector after the last query.
std::vector<sim::Operation> genqkey_finalize(const std::string& prefix);
/// The whole purified key generation, queries included.
std::vector<sim::Operation> genqkey_circuit(const OssInstance& inst, const std::string& prefix = "");

/// The flame: sum_x 2^{-n/2} |H(x)>_vk |A J(x) + b>_key with every other
/// workspace register zero, produced by running the circuit.
sim::SparseState gen_qkey_purified(const OssInstance& inst, const std::string& prefix = "");
/// The same state written down directly from the secrets.
sim::SparseState ideal_flame(const OssInstance& inst, const std::string& prefix = "");

/// Uniform superposition over ColSpan(A_y) + b_y on a single register "key".
sim::SparseState coset_state(const OssInstance& inst, std::uint64_t y);

struct OssKey {
  std::uint64_t vk = 0;
  sim::SparseState state;  // one register "key" of width k
};

/// Measured key generation: runs the purified circuit and measures vk.
OssKey gen_qkey(const OssInstance& inst, Rng& rng);

struct SignOutcome {
  std::optional<std::uint64_t> signature;
  /// Iteration that succeeded (0-based), or -1 when all failed.
  int success_iteration = -1;
  /// Key register value measured at the end, whether or not signing worked.
  std::uint64_t final_key = 0;
};

/// Measured signing loop. The key state is consumed.
SignOutcome sign_detailed(const OssInstance& inst, OssKey key, bool m, int jmax, Rng& rng);
std::optional<std::uint64_t> sign(const OssInstance& inst, OssKey key, bool m, int jmax, Rng& rng);

bool verify(const OssInstance& inst, std::uint64_t vk, bool m, std::uint64_t sig);

/// Sorted coset members whose first bit is m.
std::vector<std::uint64_t> enumerate_signatures(const OssInstance& inst, std::uint64_t vk, bool m);

enum class SignMode {
  Grover,
  /// Test-only unitary built from the secrets: adds a coset vector with
  /// first entry 1 when the first key bit differs from m. Never fails on a
  /// good key, so it separates routing errors from jmax truncation.
  ExactSurrogate,
};

struct SignRegisters {
  std::string vk = "vk";
  std::string key = "key";
  std::string m = "msg";
  std::string flag = "flag";  // jmax bits
  std::string mark = "mark";  // jmax bits
};

/// Adds flag(jmax) and mark(jmax) plus an alias aux2 over both.
void add_sign_ancillas(sim::RegisterLayout& layout, const std::string& prefix, int jmax);
SignRegisters sign_registers(const std::string& workspace_prefix, const std::string& ancilla_prefix,
                             const std::string& msg);

struct CoherentSignTranscript {
  std::vector<sim::Operation> ops;
  std::vector<std::string> ancillas;
};

std::vector<sim::Operation> coherent_sign_ops(const OssInstance& inst, const SignRegisters& regs,
                                              int jmax, SignMode mode = SignMode::Grover);

/// Applies the measurement-deferred signing loop. Throws ParameterError if
/// the ancillas are not all zero beforehand.
CoherentSignTranscript coherent_sign(sim::SparseState& state, const OssInstance& inst,
                                     const SignRegisters& regs, int jmax,
                                     SignMode mode = SignMode::Grover);

/// Oracle vk -> the first column of A_vk with first entry 1 (0 if none).
oracles::OraclePtr signing_shift_oracle(const OssInstance& inst);

}  // namespace osslab::oss
