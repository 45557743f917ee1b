#pragma once

// Oracle families for the one-shot signature (OSS) scheme and the key-fire
// scheme built on top of it.
//
// Every oracle that can fail returns a bottom-encoded word: bit 0 is a
// validity flag and the payload sits directly above it. An invalid output is
// the all-zero word.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "osslab/classical_oracle.hpp"
#include "osslab/common.hpp"
#include "osslab/gf2.hpp"
#include "osslab/random.hpp"

namespace osslab::oracles {

/// Largest domain for which truth tables are materialized.
inline constexpr int kMaxTableWidth = 20;

std::uint64_t bottom_encode(std::uint64_t payload, int payload_width, bool valid);

struct Decoded {
  bool valid = false;
  std::uint64_t payload = 0;
};

/// Throws FormatError when the flag is 0 but the payload is not.
Decoded bottom_decode(std::uint64_t bits, int payload_width);

/// Uniformly random function given by a truth table regenerated from a seed.
class RandomFunction {
 public:
  RandomFunction(int in_width, int out_width, std::uint64_t seed);

  int in_width() const { return in_width_; }
  int out_width() const { return out_width_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& table() const { return table_; }

  std::uint64_t operator()(std::uint64_t x) const { return table_[x & low_mask(in_width_)]; }

 private:
  int in_width_;
  int out_width_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> table_;
};

/// Uniformly random permutation of {0,1}^width (Fisher-Yates from a seed).
class RandomPermutation {
 public:
  RandomPermutation(int width, std::uint64_t seed);

  int width() const { return width_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& table() const { return forward_; }

  std::uint64_t forward(std::uint64_t x) const { return forward_[x & low_mask(width_)]; }
  std::uint64_t inverse(std::uint64_t y) const { return inverse_[y & low_mask(width_)]; }

 private:
  int width_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> forward_;
  std::vector<std::uint64_t> inverse_;
};

struct OssParams {
  int n = 4;
  int r = 2;
  int k = 4;

  /// Throws ParameterError unless 1 <= r < n <= k, n <= 20 and the
  /// dispatch oracle's input fits a machine word.
  void validate() const;

  /// Asymptotic setting q = 16*lambda, r = q*(lambda-1), n = r + 3q/2,
  /// k = n. Far beyond simulation range; kept for reference only.
  static OssParams from_security_parameter(int lambda);

  /// Width of a dispatch payload: y(r) | v(k) | m(1).
  int payload_width() const { return r + k + 1; }
  /// p2: selector plus payload.
  int dispatch_in_width() const { return 2 + payload_width(); }
  /// Validity flag plus r + k data bits (r + k >= n always).
  int dispatch_out_width() const { return 1 + r + k; }
  /// Dimension of every coset ColSpan(A_y) + b_y.
  int coset_dim() const { return n - r; }

  friend bool operator==(const OssParams&, const OssParams&) = default;
};

/// Selector values of the GenQKey dispatch oracle (low 2 bits of its input).
enum class Sel : std::uint64_t { D0 = 0, P = 1, Pinv = 2, D = 3 };

struct OssSeeds {
  std::uint64_t permutation = 0;
  std::uint64_t matrices = 0;

  friend bool operator==(const OssSeeds&, const OssSeeds&) = default;
};

/// The OSS oracle family together with the secrets that generate it.
///
/// Copies share the underlying tables.
class OssInstance {
 public:
  const OssParams& params() const;
  const OssSeeds& seeds() const;

  const RandomPermutation& permutation() const;
  const gf2::Matrix& A(std::uint64_t y) const;
  const gf2::Vector& b(std::uint64_t y) const;

  /// First r bits of pi(x).
  std::uint64_t H(std::uint64_t x) const;
  /// Last n - r bits of pi(x).
  std::uint64_t J(std::uint64_t x) const;

  /// (y, A_y * J(x) + b_y) with y = H(x).
  std::pair<std::uint64_t, std::uint64_t> P(std::uint64_t x) const;
  std::optional<std::uint64_t> Pinv(std::uint64_t y, std::uint64_t v) const;
  /// v^T A_y = 0 and v != 0.
  bool D(std::uint64_t y, std::uint64_t v) const;
  /// v in ColSpan(A_y) + b_y and its first bit equals m.
  bool D0(std::uint64_t y, bool m, std::uint64_t v) const;
  /// Bundled oracle: input sel(2) | y(r) | v(k) | m(1); P reads x from the
  /// low n payload bits. Output is bottom-encoded with r + k data bits.
  std::uint64_t dispatch(std::uint64_t input) const;

  /// A_y has a column whose first entry is 1, so both messages can be signed.
  bool is_good_key(std::uint64_t y) const;
  /// The first column of A_y with first entry 1, or 0 for a bad key.
  std::uint64_t signing_shift(std::uint64_t y) const;

  /// FNV-1a digest of the generated permutation and coset tables.
  std::uint64_t table_digest() const;

  // Oracle objects; inputs are concatenated in argument order.
  const OraclePtr& P_oracle() const;     // x(n) -> y(r) | v(k)
  const OraclePtr& Pinv_oracle() const;  // y(r) | v(k) -> flag | x(n)
  const OraclePtr& D_oracle() const;     // y(r) | v(k) -> 1
  const OraclePtr& D0_oracle() const;    // y(r) | m(1) | v(k) -> 1
  const OraclePtr& dispatch_oracle() const;
  /// (y, z) -> D(y, z) or [z = 0]; the mark used by the signing loop.
  const OraclePtr& sign_mark_oracle() const;

  struct Impl;

 private:
  friend OssInstance make_oss_instance(const OssParams&, const OssSeeds&);
  explicit OssInstance(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Deterministic construction from explicit seeds.
OssInstance make_oss_instance(const OssParams& params, const OssSeeds& seeds);

/// Draws fresh seeds from rng and builds the instance.
OssInstance gen_oss_oracles(const OssParams& params, Rng& rng);

/// Builds the dispatch input word for a selector and payload fields.
std::uint64_t dispatch_input(const OssParams& p, Sel sel, std::uint64_t y, std::uint64_t v,
                             bool m = false);
std::uint64_t dispatch_input_for_x(const OssParams& p, std::uint64_t x);

struct KeyFireParams {
  OssParams oss;
  int att = 3;   // output width of H0 and H1
  int sig = 3;   // output width of Hsig
  int nu = 4;    // message width
  int jmax = 10; // signing iterations

  /// Checks widths, the clone register budget and that messages fit in a
  /// dispatch input (O3 reuses the attestation gate with z := m).
  void validate() const;

  /// Bits of one GenQKey workspace (the flame register set).
  int workspace_width() const { return 4 + 2 * (oss.r + oss.k); }
  /// Total register width of the clone circuit.
  int clone_register_width() const {
    return 2 * workspace_width() + 1 + 2 * jmax + 2 * (1 + att);
  }
  /// Width of one attestation register (validity flag plus att bits).
  int attestation_width() const { return 1 + att; }

  friend bool operator==(const KeyFireParams&, const KeyFireParams&) = default;
};

struct KeyFireSeeds {
  OssSeeds oss;
  std::uint64_t h0 = 0;
  std::uint64_t h1 = 0;
  std::uint64_t hsig = 0;

  friend bool operator==(const KeyFireSeeds&, const KeyFireSeeds&) = default;
};

/// Key-fire oracles O0..O4 over an OSS instance.
///
/// Input layouts (first field lowest):
///   O0, O1: ivk(r) | isig(k) | z(p2)            -> flag | att
///   O2:     ivk(r) | y0(1+att) | y1(1+att) | z   -> dispatch output
///   O3:     ivk(r) | y0 | y1 | m(nu)             -> flag | sig
///   O4:     m(nu) | y(sig)                        -> 1
class KeyFireInstance {
 public:
  const KeyFireParams& params() const;
  const KeyFireSeeds& seeds() const;
  const OssInstance& oss() const;
  const RandomFunction& H0() const;
  const RandomFunction& H1() const;
  const RandomFunction& Hsig() const;

  /// H0 / H1 applied to ivk | z.
  std::uint64_t h0(std::uint64_t ivk, std::uint64_t z) const;
  std::uint64_t h1(std::uint64_t ivk, std::uint64_t z) const;

  std::uint64_t O0(std::uint64_t ivk, std::uint64_t isig, std::uint64_t z) const;
  std::uint64_t O1(std::uint64_t ivk, std::uint64_t isig, std::uint64_t z) const;
  std::uint64_t O2(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1, std::uint64_t z) const;
  std::uint64_t O3(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1, std::uint64_t m) const;
  bool O4(std::uint64_t m, std::uint64_t y) const;

  const OraclePtr& O0_oracle() const;
  const OraclePtr& O1_oracle() const;
  const OraclePtr& O2_oracle() const;
  const OraclePtr& O3_oracle() const;
  const OraclePtr& O4_oracle() const;

  /// Digest of the OSS tables and the three random-function tables.
  std::uint64_t table_digest() const;

  struct Impl;

 private:
  friend KeyFireInstance make_keyfire_instance(const KeyFireParams&, const KeyFireSeeds&);
  explicit KeyFireInstance(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

KeyFireInstance make_keyfire_instance(const KeyFireParams& params, const KeyFireSeeds& seeds);
KeyFireInstance gen_keyfire_oracles(const KeyFireParams& params, Rng& rng);

/// FNV-1a over 64-bit words, little-endian byte order.
std::uint64_t fnv1a(const std::uint64_t* words, std::size_t count,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace osslab::oracles
