#include "osslab/oracles.hpp"

#include <bit>
#include <string>

namespace osslab::oracles {

std::uint64_t bottom_encode(std::uint64_t payload, int payload_width, bool valid) {
  if (!valid) return 0;
  return 1U | ((payload & low_mask(payload_width)) << 1);
}

Decoded bottom_decode(std::uint64_t bits, int payload_width) {
  const std::uint64_t payload = (bits >> 1) & low_mask(payload_width);
  if ((bits & 1U) == 0) {
    if (payload != 0) throw FormatError("malformed oracle output: invalid flag with payload");
    return {false, 0};
  }
  return {true, payload};
}

std::uint64_t fnv1a(const std::uint64_t* words, std::size_t count, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < count; ++i) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (words[i] >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Random tables

RandomFunction::RandomFunction(int in_width, int out_width, std::uint64_t seed)
    : in_width_(in_width), out_width_(out_width), seed_(seed) {
  if (in_width < 1 || in_width > kMaxTableWidth) {
    throw ParameterError("random function input width must be in [1, 20]");
  }
  if (out_width < 1 || out_width > 64) {
    throw ParameterError("random function output width must be in [1, 64]");
  }
  Rng rng(seed);
  table_.resize(std::size_t{1} << in_width);
  for (auto& v : table_) v = rng.bits(out_width);
}

RandomPermutation::RandomPermutation(int width, std::uint64_t seed) : width_(width), seed_(seed) {
  if (width < 1 || width > kMaxTableWidth) {
    throw ParameterError("random permutation width must be in [1, 20]");
  }
  const std::size_t size = std::size_t{1} << width;
  forward_.resize(size);
  for (std::size_t i = 0; i < size; ++i) forward_[i] = i;
  Rng rng(seed);
  for (std::size_t i = size - 1; i > 0; --i) {
    std::swap(forward_[i], forward_[rng.below(i + 1)]);
  }
  inverse_.resize(size);
  for (std::size_t i = 0; i < size; ++i) inverse_[forward_[i]] = i;
}

// ---------------------------------------------------------------------------
// OSS parameters and instance

void OssParams::validate() const {
  if (r < 1 || r >= n || n > k) {
    throw ParameterError("OSS parameters need 1 <= r < n <= k (n=" + std::to_string(n) +
                         ", r=" + std::to_string(r) + ", k=" + std::to_string(k) + ")");
  }
  if (n > kMaxTableWidth) throw ParameterError("OSS parameter n must be at most 20");
  if (dispatch_in_width() > 64) throw ParameterError("dispatch input exceeds 64 bits");
}

OssParams OssParams::from_security_parameter(int lambda) {
  const int q = 16 * lambda;
  const int r = q * (lambda - 1);
  const int n = r + 3 * q / 2;
  return {n, r, n};
}

std::uint64_t dispatch_input(const OssParams& p, Sel sel, std::uint64_t y, std::uint64_t v,
                             bool m) {
  const std::uint64_t payload = (y & low_mask(p.r)) | ((v & low_mask(p.k)) << p.r) |
                                (static_cast<std::uint64_t>(m) << (p.r + p.k));
  return static_cast<std::uint64_t>(sel) | (payload << 2);
}

std::uint64_t dispatch_input_for_x(const OssParams& p, std::uint64_t x) {
  return static_cast<std::uint64_t>(Sel::P) | ((x & low_mask(p.n)) << 2);
}

namespace {

// Secrets and the fast evaluation paths shared by the oracle closures.
struct OssCore {
  struct Pivot {
    std::uint64_t bits;
    std::uint64_t combo;
    std::uint64_t lead;
  };

  OssParams params;
  OssSeeds seeds;
  RandomPermutation pi;
  std::vector<gf2::Matrix> A;
  std::vector<gf2::Vector> b;
  std::vector<std::vector<std::uint64_t>> cols;
  std::vector<std::uint64_t> bw;
  std::vector<std::uint64_t> shift;
  std::vector<std::vector<Pivot>> solver;

  OssCore(const OssParams& p, const OssSeeds& s) : params(p), seeds(s), pi(p.n, s.permutation) {
    Rng rng(s.matrices);
    const std::size_t keys = std::size_t{1} << p.r;
    for (std::size_t y = 0; y < keys; ++y) {
      A.push_back(gf2::sample_full_column_rank(p.k, p.coset_dim(), rng));
      b.emplace_back(p.k, rng.bits(p.k));
    }
    for (std::size_t y = 0; y < keys; ++y) {
      std::vector<std::uint64_t> c;
      std::uint64_t first = 0;
      for (const gf2::Vector& col : A[y].columns()) {
        c.push_back(col.bits());
        if (first == 0 && (col.bits() & 1U)) first = col.bits();
      }
      std::vector<Pivot> rows;
      for (std::size_t j = 0; j < c.size(); ++j) {
        Pivot row{c[j], std::uint64_t{1} << j, 0};
        for (const Pivot& pv : rows) {
          if (row.bits & pv.lead) {
            row.bits ^= pv.bits;
            row.combo ^= pv.combo;
          }
        }
        row.lead = std::uint64_t{1} << (63 - std::countl_zero(row.bits));
        rows.push_back(row);
      }
      cols.push_back(std::move(c));
      bw.push_back(b[y].bits());
      shift.push_back(first);
      solver.push_back(std::move(rows));
    }
  }

  std::uint64_t H(std::uint64_t x) const { return pi.forward(x) & low_mask(params.r); }
  std::uint64_t J(std::uint64_t x) const { return pi.forward(x) >> params.r; }

  std::uint64_t combine(std::uint64_t y, std::uint64_t z) const {
    std::uint64_t acc = 0;
    const auto& c = cols[y];
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (bit_at(z, static_cast<int>(j))) acc ^= c[j];
    }
    return acc;
  }

  std::pair<std::uint64_t, std::uint64_t> P(std::uint64_t x) const {
    const std::uint64_t y = H(x);
    return {y, combine(y, J(x)) ^ bw[y]};
  }

  // z with A_y z = v + b_y, if any.
  std::optional<std::uint64_t> coset_coords(std::uint64_t y, std::uint64_t v) const {
    std::uint64_t t = v ^ bw[y];
    std::uint64_t combo = 0;
    for (const Pivot& pv : solver[y]) {
      if (t & pv.lead) {
        t ^= pv.bits;
        combo ^= pv.combo;
      }
    }
    if (t != 0) return std::nullopt;
    return combo;
  }

  std::optional<std::uint64_t> Pinv(std::uint64_t y, std::uint64_t v) const {
    const auto z = coset_coords(y, v);
    if (!z) return std::nullopt;
    return pi.inverse(y | (*z << params.r));
  }

  bool D(std::uint64_t y, std::uint64_t v) const {
    if (v == 0) return false;
    for (std::uint64_t c : cols[y]) {
      if (std::popcount(c & v) & 1) return false;
    }
    return true;
  }

  bool D0(std::uint64_t y, bool m, std::uint64_t v) const {
    return ((v & 1U) != 0) == m && coset_coords(y, v).has_value();
  }

  std::uint64_t dispatch(std::uint64_t input) const {
    const int r = params.r;
    const int k = params.k;
    const int data = r + k;
    const std::uint64_t payload = input >> 2;
    const std::uint64_t y = payload & low_mask(r);
    const std::uint64_t v = (payload >> r) & low_mask(k);
    switch (static_cast<Sel>(input & 3U)) {
      case Sel::P: {
        const auto [py, pv] = P(payload & low_mask(params.n));
        return bottom_encode(py | (pv << r), data, true);
      }
      case Sel::Pinv: {
        const auto x = Pinv(y, v);
        return x ? bottom_encode(*x, data, true) : 0;
      }
      case Sel::D:
        return bottom_encode(D(y, v) ? 1 : 0, data, true);
      case Sel::D0:
        return bottom_encode(D0(y, bit_at(payload, r + k), v) ? 1 : 0, data, true);
    }
    return 0;
  }

  std::uint64_t digest() const {
    std::vector<std::uint64_t> words(pi.table());
    for (std::size_t y = 0; y < cols.size(); ++y) {
      words.insert(words.end(), cols[y].begin(), cols[y].end());
      words.push_back(bw[y]);
    }
    return fnv1a(words.data(), words.size());
  }
};

}  // namespace

struct OssInstance::Impl {
  std::shared_ptr<const OssCore> core;
  OraclePtr p, pinv, d, d0, dispatch, mark;
  std::uint64_t digest = 0;
};

OssInstance make_oss_instance(const OssParams& params, const OssSeeds& seeds) {
  params.validate();
  auto core = std::make_shared<const OssCore>(params, seeds);
  auto impl = std::make_shared<OssInstance::Impl>();
  const int n = params.n;
  const int r = params.r;
  const int k = params.k;
  impl->core = core;
  impl->p = make_oracle("P", n, r + k, [core, r](std::uint64_t x) {
    const auto [y, v] = core->P(x);
    return y | (v << r);
  });
  impl->pinv = make_oracle("Pinv", r + k, 1 + n, [core, r, k, n](std::uint64_t in) {
    const auto x = core->Pinv(in & low_mask(r), (in >> r) & low_mask(k));
    return x ? bottom_encode(*x, n, true) : 0;
  });
  impl->d = make_oracle("D", r + k, 1, [core, r, k](std::uint64_t in) -> std::uint64_t {
    return core->D(in & low_mask(r), (in >> r) & low_mask(k)) ? 1 : 0;
  });
  impl->d0 = make_oracle("D0", r + 1 + k, 1, [core, r, k](std::uint64_t in) -> std::uint64_t {
    return core->D0(in & low_mask(r), bit_at(in, r), (in >> (r + 1)) & low_mask(k)) ? 1 : 0;
  });
  impl->dispatch = make_oracle("GenQKey", params.dispatch_in_width(), params.dispatch_out_width(),
                               [core](std::uint64_t in) { return core->dispatch(in); });
  impl->mark = make_oracle("SignMark", r + k, 1, [core, r, k](std::uint64_t in) -> std::uint64_t {
    const std::uint64_t z = (in >> r) & low_mask(k);
    return (z == 0 || core->D(in & low_mask(r), z)) ? 1 : 0;
  });
  impl->digest = core->digest();
  return OssInstance(std::move(impl));
}

OssInstance gen_oss_oracles(const OssParams& params, Rng& rng) {
  OssSeeds seeds;
  seeds.permutation = rng.next_u64();
  seeds.matrices = rng.next_u64();
  return make_oss_instance(params, seeds);
}

const OssParams& OssInstance::params() const { return impl_->core->params; }
const OssSeeds& OssInstance::seeds() const { return impl_->core->seeds; }
const RandomPermutation& OssInstance::permutation() const { return impl_->core->pi; }
const gf2::Matrix& OssInstance::A(std::uint64_t y) const { return impl_->core->A.at(y); }
const gf2::Vector& OssInstance::b(std::uint64_t y) const { return impl_->core->b.at(y); }
std::uint64_t OssInstance::H(std::uint64_t x) const { return impl_->core->H(x); }
std::uint64_t OssInstance::J(std::uint64_t x) const { return impl_->core->J(x); }

std::pair<std::uint64_t, std::uint64_t> OssInstance::P(std::uint64_t x) const {
  if ((x & ~low_mask(params().n)) != 0) throw ParameterError("P: x wider than n bits");
  return impl_->core->P(x);
}

std::optional<std::uint64_t> OssInstance::Pinv(std::uint64_t y, std::uint64_t v) const {
  const OssParams& p = params();
  if ((y & ~low_mask(p.r)) != 0 || (v & ~low_mask(p.k)) != 0) {
    throw ParameterError("Pinv: argument wider than its field");
  }
  return impl_->core->Pinv(y, v);
}

bool OssInstance::D(std::uint64_t y, std::uint64_t v) const {
  const OssParams& p = params();
  if ((y & ~low_mask(p.r)) != 0 || (v & ~low_mask(p.k)) != 0) {
    throw ParameterError("D: argument wider than its field");
  }
  return impl_->core->D(y, v);
}

bool OssInstance::D0(std::uint64_t y, bool m, std::uint64_t v) const {
  const OssParams& p = params();
  if ((y & ~low_mask(p.r)) != 0 || (v & ~low_mask(p.k)) != 0) {
    throw ParameterError("D0: argument wider than its field");
  }
  return impl_->core->D0(y, m, v);
}

std::uint64_t OssInstance::dispatch(std::uint64_t input) const { return (*impl_->dispatch)(input); }

bool OssInstance::is_good_key(std::uint64_t y) const { return impl_->core->shift.at(y) != 0; }
std::uint64_t OssInstance::signing_shift(std::uint64_t y) const { return impl_->core->shift.at(y); }
std::uint64_t OssInstance::table_digest() const { return impl_->digest; }

const OraclePtr& OssInstance::P_oracle() const { return impl_->p; }
const OraclePtr& OssInstance::Pinv_oracle() const { return impl_->pinv; }
const OraclePtr& OssInstance::D_oracle() const { return impl_->d; }
const OraclePtr& OssInstance::D0_oracle() const { return impl_->d0; }
const OraclePtr& OssInstance::dispatch_oracle() const { return impl_->dispatch; }
const OraclePtr& OssInstance::sign_mark_oracle() const { return impl_->mark; }

// ---------------------------------------------------------------------------
// Key-fire

void KeyFireParams::validate() const {
  oss.validate();
  if (att < 1 || sig < 1 || nu < 1) throw ParameterError("key-fire widths must be positive");
  if (jmax < 1) throw ParameterError("jmax must be at least 1");
  if (nu > oss.dispatch_in_width()) {
    throw ParameterError("message width must not exceed the dispatch input width");
  }
  if (nu > kMaxTableWidth || oss.r + oss.dispatch_in_width() > kMaxTableWidth) {
    throw ParameterError("key-fire random-function domains exceed 2^20");
  }
  if (oss.r + 2 * attestation_width() + oss.dispatch_in_width() > 64 || sig >= 64 || att >= 64) {
    throw ParameterError("key-fire oracle inputs exceed 64 bits");
  }
  if (clone_register_width() > 64) {
    throw ParameterError("clone circuit needs " + std::to_string(clone_register_width()) +
                         " register bits, above the 64-bit limit");
  }
}

namespace {

struct KeyFireCore {
  KeyFireParams params;
  KeyFireSeeds seeds;
  OssInstance oss;
  RandomFunction H0;
  RandomFunction H1;
  RandomFunction Hsig;

  KeyFireCore(const KeyFireParams& p, const KeyFireSeeds& s)
      : params(p),
        seeds(s),
        oss(make_oss_instance(p.oss, s.oss)),
        H0(p.oss.r + p.oss.dispatch_in_width(), p.att, s.h0),
        H1(p.oss.r + p.oss.dispatch_in_width(), p.att, s.h1),
        Hsig(p.nu, p.sig, s.hsig) {}

  std::uint64_t h(const RandomFunction& f, std::uint64_t ivk, std::uint64_t z) const {
    return f(ivk | (z << params.oss.r));
  }

  std::uint64_t attest(bool which, std::uint64_t ivk, std::uint64_t isig, std::uint64_t z) const {
    if (!oss.D0(ivk, which, isig)) return 0;
    return bottom_encode(h(which ? H1 : H0, ivk, z), params.att, true);
  }

  bool unlocked(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1, std::uint64_t z) const {
    return y0 == bottom_encode(h(H0, ivk, z), params.att, true) &&
           y1 == bottom_encode(h(H1, ivk, z), params.att, true);
  }

  std::uint64_t O2(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1, std::uint64_t z) const {
    return unlocked(ivk, y0, y1, z) ? oss.dispatch(z) : 0;
  }

  std::uint64_t O3(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1, std::uint64_t m) const {
    return unlocked(ivk, y0, y1, m) ? bottom_encode(Hsig(m), params.sig, true) : 0;
  }
};

}  // namespace

struct KeyFireInstance::Impl {
  std::shared_ptr<const KeyFireCore> core;
  OraclePtr o0, o1, o2, o3, o4;
  std::uint64_t digest = 0;
};

KeyFireInstance make_keyfire_instance(const KeyFireParams& params, const KeyFireSeeds& seeds) {
  params.validate();
  auto core = std::make_shared<const KeyFireCore>(params, seeds);
  auto impl = std::make_shared<KeyFireInstance::Impl>();
  impl->core = core;
  const int r = params.oss.r;
  const int k = params.oss.k;
  const int p2 = params.oss.dispatch_in_width();
  const int aw = params.attestation_width();
  const int nu = params.nu;
  for (int which = 0; which < 2; ++which) {
    auto fn = [core, r, k, p2, which](std::uint64_t in) {
      return core->attest(which != 0, in & low_mask(r), (in >> r) & low_mask(k),
                          (in >> (r + k)) & low_mask(p2));
    };
    (which == 0 ? impl->o0 : impl->o1) =
        make_oracle(which == 0 ? "O0" : "O1", r + k + p2, aw, std::move(fn));
  }
  impl->o2 = make_oracle("O2", r + 2 * aw + p2, params.oss.dispatch_out_width(),
                         [core, r, aw, p2](std::uint64_t in) {
                           return core->O2(in & low_mask(r), (in >> r) & low_mask(aw),
                                           (in >> (r + aw)) & low_mask(aw),
                                           (in >> (r + 2 * aw)) & low_mask(p2));
                         });
  impl->o3 = make_oracle("O3", r + 2 * aw + nu, 1 + params.sig,
                         [core, r, aw, nu](std::uint64_t in) {
                           return core->O3(in & low_mask(r), (in >> r) & low_mask(aw),
                                           (in >> (r + aw)) & low_mask(aw),
                                           (in >> (r + 2 * aw)) & low_mask(nu));
                         });
  impl->o4 = make_oracle("O4", nu + params.sig, 1, [core, nu](std::uint64_t in) -> std::uint64_t {
    return core->Hsig(in & low_mask(nu)) == (in >> nu) ? 1 : 0;
  });
  std::vector<std::uint64_t> words{core->oss.table_digest()};
  for (const RandomFunction* f : {&core->H0, &core->H1, &core->Hsig}) {
    words.insert(words.end(), f->table().begin(), f->table().end());
  }
  impl->digest = fnv1a(words.data(), words.size());
  return KeyFireInstance(std::move(impl));
}

KeyFireInstance gen_keyfire_oracles(const KeyFireParams& params, Rng& rng) {
  KeyFireSeeds seeds;
  seeds.oss.permutation = rng.next_u64();
  seeds.oss.matrices = rng.next_u64();
  seeds.h0 = rng.next_u64();
  seeds.h1 = rng.next_u64();
  seeds.hsig = rng.next_u64();
  return make_keyfire_instance(params, seeds);
}

const KeyFireParams& KeyFireInstance::params() const { return impl_->core->params; }
const KeyFireSeeds& KeyFireInstance::seeds() const { return impl_->core->seeds; }
const OssInstance& KeyFireInstance::oss() const { return impl_->core->oss; }
const RandomFunction& KeyFireInstance::H0() const { return impl_->core->H0; }
const RandomFunction& KeyFireInstance::H1() const { return impl_->core->H1; }
const RandomFunction& KeyFireInstance::Hsig() const { return impl_->core->Hsig; }

std::uint64_t KeyFireInstance::h0(std::uint64_t ivk, std::uint64_t z) const {
  return impl_->core->h(impl_->core->H0, ivk, z);
}
std::uint64_t KeyFireInstance::h1(std::uint64_t ivk, std::uint64_t z) const {
  return impl_->core->h(impl_->core->H1, ivk, z);
}

std::uint64_t KeyFireInstance::O0(std::uint64_t ivk, std::uint64_t isig, std::uint64_t z) const {
  return impl_->core->attest(false, ivk, isig, z);
}
std::uint64_t KeyFireInstance::O1(std::uint64_t ivk, std::uint64_t isig, std::uint64_t z) const {
  return impl_->core->attest(true, ivk, isig, z);
}
std::uint64_t KeyFireInstance::O2(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1,
                                  std::uint64_t z) const {
  return impl_->core->O2(ivk, y0, y1, z);
}
std::uint64_t KeyFireInstance::O3(std::uint64_t ivk, std::uint64_t y0, std::uint64_t y1,
                                  std::uint64_t m) const {
  return impl_->core->O3(ivk, y0, y1, m);
}
bool KeyFireInstance::O4(std::uint64_t m, std::uint64_t y) const {
  return impl_->core->Hsig(m) == y;
}

const OraclePtr& KeyFireInstance::O0_oracle() const { return impl_->o0; }
const OraclePtr& KeyFireInstance::O1_oracle() const { return impl_->o1; }
const OraclePtr& KeyFireInstance::O2_oracle() const { return impl_->o2; }
const OraclePtr& KeyFireInstance::O3_oracle() const { return impl_->o3; }
const OraclePtr& KeyFireInstance::O4_oracle() const { return impl_->o4; }
std::uint64_t KeyFireInstance::table_digest() const { return impl_->digest; }

}  // namespace osslab::oracles
