#include "osslab/sim.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <utility>
#include <map>
#include <span>
#include <sstream>
#include <unordered_map>

namespace osslab::sim {
namespace {

template <int W>
void walsh_hadamard_fixed(Amplitude* buf) {
  constexpr std::size_t block = std::size_t{1} << W;
  for (std::size_t h = 1; h < block; h <<= 1) {
    for (std::size_t i = 0; i < block; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const Amplitude a = buf[j];
        const Amplitude b = buf[j + h];
        buf[j] = a + b;
        buf[j + h] = a - b;
      }
    }
  }
}

// Unnormalised in-place transform of 2^width amplitudes. Small widths get a
// compile-time block size so the loops unroll.
void walsh_hadamard(Amplitude* buf, int width) {
  switch (width) {
    case 1: return walsh_hadamard_fixed<1>(buf);
    case 2: return walsh_hadamard_fixed<2>(buf);
    case 3: return walsh_hadamard_fixed<3>(buf);
    case 4: return walsh_hadamard_fixed<4>(buf);
    case 5: return walsh_hadamard_fixed<5>(buf);
    default: break;
  }
  const std::size_t block = std::size_t{1} << width;
  for (std::size_t h = 1; h < block; h <<= 1) {
    for (std::size_t i = 0; i < block; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const Amplitude a = buf[j];
        const Amplitude b = buf[j + h];
        buf[j] = a + b;
        buf[j + h] = a - b;
      }
    }
  }
}

// Stable LSD radix sort of 64-bit words on bits [lo, hi), in as few passes
// of at most 12 bits as the range allows.
void radix_sort_bits(std::vector<std::uint64_t>& words, int lo, int hi) {
  if (hi <= lo) return;
  const int passes = (hi - lo + 11) / 12;
  const int digit = (hi - lo + passes - 1) / passes;
  const std::uint64_t mask = (std::uint64_t{1} << digit) - 1;
  thread_local std::vector<std::uint64_t> scratch;
  scratch.resize(words.size());
  std::vector<std::size_t> offsets(std::size_t{1} << digit);
  for (int shift = lo; shift < hi; shift += digit) {
    std::fill(offsets.begin(), offsets.end(), 0);
    for (std::uint64_t w : words) ++offsets[(w >> shift) & mask];
    std::size_t sum = 0;
    for (auto& o : offsets) sum += std::exchange(o, sum);
    for (std::uint64_t w : words) scratch[offsets[(w >> shift) & mask]++] = w;
    words.swap(scratch);
  }
}

// Fills `order` with the indices of `entries` arranged so that entries with
// equal label & key_mask are adjacent and groups ascend by that key. Inside
// a group the original order is kept. May reorder `entries` itself for small
// inputs, in which case `order` is the identity.
void group_order(std::span<SparseState::Entry> entries, Label key_mask,
                 std::vector<std::uint64_t>& order) {
  using Entry = SparseState::Entry;
  const std::size_t count = entries.size();
  const auto identity = [&] {
    order.resize(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
  };
  if (count < 2) return identity();
  Label any = 0;
  Label all = ~Label{0};
  bool grouped = true;
  Label prev = entries[0].label & key_mask;
  for (const Entry& e : entries) {
    const Label k = e.label & key_mask;
    any |= k;
    all &= k;
    grouped = grouped && k >= prev;
    prev = k;
  }
  if (grouped) return identity();
  const Label varying = any & ~all;
  const int key_bits = std::popcount(varying);
  const int index_bits = std::bit_width(count - 1);
  if (count < 256 || key_bits + index_bits > 64) {
    std::stable_sort(entries.begin(), entries.end(), [key_mask](const Entry& a, const Entry& b) {
      return (a.label & key_mask) < (b.label & key_mask);
    });
    return identity();
  }

  // The varying bits, packed densely above the index, as contiguous runs.
  struct Run {
    int from;
    Label mask;
    int to;
  };
  std::vector<Run> runs;
  int packed = index_bits;
  for (Label rest = varying; rest != 0;) {
    const int lo = std::countr_zero(rest);
    const int len = std::countr_one(rest >> lo);
    const Label mask = len == 64 ? ~Label{0} : (Label{1} << len) - 1;
    runs.push_back({lo, mask, packed});
    packed += len;
    rest &= ~(mask << lo);
  }
  order.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Label label = entries[i].label;
    std::uint64_t word = i;
    for (const Run& r : runs) word |= ((label >> r.from) & r.mask) << r.to;
    order[i] = word;
  }
  radix_sort_bits(order, index_bits, index_bits + key_bits);
  const std::uint64_t index_mask = (std::uint64_t{1} << index_bits) - 1;
  for (auto& w : order) w &= index_mask;
}

int parse_int(std::string_view text, std::string_view spec) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParameterError("malformed register slice: " + std::string(spec));
  }
  return value;
}

std::uint64_t gather(Label label, const std::vector<RegisterRef>& refs) {
  std::uint64_t acc = 0;
  int shift = 0;
  for (const RegisterRef& r : refs) {
    acc |= r.read(label) << shift;
    shift += r.width;
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// RegisterLayout

RegisterLayout& RegisterLayout::add(std::string name, int width) {
  if (width < 1) throw ParameterError("register " + name + " must have positive width");
  if (name.empty() || name.find('[') != std::string::npos) {
    throw ParameterError("invalid register name '" + name + "'");
  }
  if (lookup(name) != nullptr) throw ParameterError("duplicate register name " + name);
  if (total_width_ + width > kMaxLayoutWidth) {
    throw ParameterError("register layout exceeds 64 bits when adding " + name);
  }
  registers_.push_back({std::move(name), total_width_, width});
  total_width_ += width;
  return *this;
}

RegisterLayout& RegisterLayout::alias(std::string name, const std::vector<std::string>& parts) {
  if (parts.empty()) throw ParameterError("alias " + name + " needs at least one part");
  if (lookup(name) != nullptr) throw ParameterError("duplicate register name " + name);
  const Register* first = lookup(parts.front());
  if (first == nullptr) throw ParameterError("alias " + name + ": unknown part " + parts.front());
  int offset = first->offset;
  int width = 0;
  for (const std::string& p : parts) {
    const Register* r = lookup(p);
    if (r == nullptr) throw ParameterError("alias " + name + ": unknown part " + p);
    if (r->offset != offset + width) {
      throw ParameterError("alias " + name + ": parts are not contiguous");
    }
    width += r->width;
  }
  aliases_.push_back({std::move(name), offset, width});
  return *this;
}

const Register* RegisterLayout::lookup(std::string_view name) const {
  for (const Register& r : registers_) {
    if (r.name == name) return &r;
  }
  for (const Register& r : aliases_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

bool RegisterLayout::has(std::string_view name) const { return lookup(name) != nullptr; }

RegisterRef RegisterLayout::find(std::string_view spec) const {
  const auto bracket = spec.find('[');
  const std::string_view name = spec.substr(0, bracket);
  const Register* r = lookup(name);
  if (r == nullptr) throw ParameterError("unknown register " + std::string(spec));
  if (bracket == std::string_view::npos) return {r->offset, r->width};

  if (spec.back() != ']') throw ParameterError("malformed register slice: " + std::string(spec));
  const std::string_view inner = spec.substr(bracket + 1, spec.size() - bracket - 2);
  int lo = 0;
  int hi = 0;
  if (const auto colon = inner.find(':'); colon == std::string_view::npos) {
    lo = parse_int(inner, spec);
    hi = lo + 1;
  } else {
    lo = parse_int(inner.substr(0, colon), spec);
    hi = parse_int(inner.substr(colon + 1), spec);
  }
  if (lo < 0 || hi > r->width || lo >= hi) {
    throw ParameterError("register slice out of range: " + std::string(spec));
  }
  return {r->offset + lo, hi - lo};
}

std::pair<std::uint64_t, std::uint64_t> Control::resolve(const RegisterLayout& layout) const {
  std::uint64_t mask = 0;
  std::uint64_t value = 0;
  for (const auto& [name, v] : tests_) {
    const RegisterRef r = layout.find(name);
    if ((v & ~low_mask(r.width)) != 0) {
      throw ParameterError("control value does not fit register " + name);
    }
    const std::uint64_t m = r.mask();
    const std::uint64_t bits = v << r.offset;
    if (((value ^ bits) & mask & m) != 0) {
      throw ParameterError("contradictory control tests on register " + name);
    }
    mask |= m;
    value |= bits;
  }
  return {mask, value};
}

// ---------------------------------------------------------------------------
// Operation helpers

namespace ops {
Operation hadamard(std::string reg, Control control) {
  return {Hadamard{std::move(reg)}, std::move(control)};
}
Operation flip(std::string reg, std::uint64_t bits, Control control) {
  return {FlipBits{std::move(reg), bits}, std::move(control)};
}
Operation swap(std::string a, std::string b, Control control) {
  return {Swap{std::move(a), std::move(b)}, std::move(control)};
}
Operation oracle_xor(OracleBinding binding, Control control) {
  return {OracleXor{std::move(binding)}, std::move(control)};
}
Operation measure(std::string reg) { return {Measure{std::move(reg)}, {}}; }
}  // namespace ops

std::string describe(const Operation& op) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Hadamard>) {
          os << "H(" << g.reg << ")";
        } else if constexpr (std::is_same_v<G, FlipBits>) {
          os << "X(" << g.reg << ")";
        } else if constexpr (std::is_same_v<G, Swap>) {
          os << "SWAP(" << g.a << "," << g.b << ")";
        } else if constexpr (std::is_same_v<G, OracleXor>) {
          os << "U_" << g.binding.oracle->name() << "(";
          for (const auto& in : g.binding.inputs) os << in << ",";
          os << "->" << g.binding.output << ")";
        } else {
          os << "MEASURE(" << g.reg << ")";
        }
      },
      op.gate);
  if (!op.control.empty()) {
    os << " if";
    for (const auto& [name, v] : op.control.tests()) os << " " << name << "=" << v;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SparseState

SparseState::SparseState(RegisterLayout layout, std::size_t support_cap)
    : layout_(std::move(layout)), entries_{{0, Amplitude{1.0, 0.0}}}, cap_(support_cap) {}

SparseState init_state(RegisterLayout layout) { return SparseState(std::move(layout)); }

SparseState SparseState::from_amplitudes(RegisterLayout layout,
                                         const std::vector<std::pair<Label, Amplitude>>& amps,
                                         bool normalize) {
  SparseState s(std::move(layout));
  s.entries_.clear();
  const std::uint64_t allowed = low_mask(s.layout_.total_width());
  for (const auto& [label, amp] : amps) {
    if ((label & ~allowed) != 0) throw ParameterError("label exceeds layout width");
    if (std::abs(amp) == 0.0) continue;
    s.entries_.push_back({label, amp});
  }
  std::sort(s.entries_.begin(), s.entries_.end(),
            [](const Entry& a, const Entry& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < s.entries_.size(); ++i) {
    if (s.entries_[i].label == s.entries_[i - 1].label) {
      throw ParameterError("duplicate label in amplitude list");
    }
  }
  if (s.entries_.empty()) throw ParameterError("state has no nonzero amplitude");
  if (normalize) {
    const double scale = 1.0 / std::sqrt(s.norm_squared());
    for (Entry& e : s.entries_) e.amp *= scale;
  }
  return s;
}

double SparseState::norm_squared() const {
  double total = 0.0;
  for (const Entry& e : entries_) total += std::norm(e.amp);
  return total;
}

Amplitude SparseState::amplitude(Label label) const {
  for (const Entry& e : entries_) {
    if (e.label == label) return e.amp;
  }
  return {0.0, 0.0};
}

void SparseState::check_cap() const {
  if (entries_.size() > cap_) {
    throw ResourceError("sparse state support " + std::to_string(entries_.size()) +
                        " exceeds cap " + std::to_string(cap_));
  }
}

template <typename Map>
void SparseState::permute(std::uint64_t cmask, std::uint64_t cval, Map&& map) {
  if (cmask == 0) {
    for (Entry& e : entries_) e.label = map(e.label);
    return;
  }
  for (Entry& e : entries_) {
    if ((e.label & cmask) == cval) e.label = map(e.label);
  }
}

void SparseState::apply(const Operation& op) {
  std::visit(
      [this, &op](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Hadamard>) {
          apply_hadamard(g.reg, op.control);
        } else if constexpr (std::is_same_v<G, FlipBits>) {
          apply_x(g.reg, g.bits, op.control);
        } else if constexpr (std::is_same_v<G, Swap>) {
          apply_swap(g.a, g.b, op.control);
        } else if constexpr (std::is_same_v<G, OracleXor>) {
          apply_oracle_xor(g.binding, op.control);
        } else {
          throw ParameterError("measurement needs a random source; call measure()");
        }
      },
      op.gate);
}

void SparseState::apply(std::span<const Operation> sequence) {
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i + 2 < sequence.size() &&
        apply_conjugated_oracle(sequence[i], sequence[i + 1], sequence[i + 2])) {
      i += 2;
      continue;
    }
    apply(sequence[i]);
  }
}

void SparseState::apply_inverse(std::span<const Operation> sequence) {
  for (const Operation& op : sequence) {
    if (std::holds_alternative<Measure>(op.gate)) {
      throw ParameterError("cannot invert a sequence containing a measurement");
    }
  }
  for (std::size_t k = sequence.size(); k > 0; --k) {
    const std::size_t i = k - 1;
    if (i >= 2 && apply_conjugated_oracle(sequence[i], sequence[i - 1], sequence[i - 2])) {
      k -= 2;
      continue;
    }
    apply(sequence[i]);
  }
}

void SparseState::apply_hadamard(std::string_view reg, const Control& control) {
  const auto [cmask, cval] = control.resolve(layout_);
  hadamard_impl(layout_.find(reg), cmask, cval);
}

void SparseState::hadamard_impl(RegisterRef reg, std::uint64_t cmask, std::uint64_t cval) {
  const std::uint64_t rmask = reg.mask();
  if ((cmask & rmask) != 0) throw ParameterError("Hadamard target overlaps its control");
  if (reg.width > 24) throw ResourceError("Hadamard on more than 24 bits at once");

  // Untouched entries first, then the ones the control selects.
  const auto mid = cmask == 0 ? entries_.begin()
                              : std::partition(entries_.begin(), entries_.end(), [&](const Entry& e) {
                                  return (e.label & cmask) != cval;
                                });
  const std::size_t untouched = static_cast<std::size_t>(mid - entries_.begin());
  const std::span<Entry> touched(entries_.data() + untouched, entries_.size() - untouched);

  // Scratch buffers are reused across calls on the same thread; `next`
  // trades places with entries_ at the end, so its old storage comes back.
  thread_local std::vector<std::uint64_t> order;
  thread_local std::vector<Entry> next;
  group_order(touched, ~rmask, order);

  const std::size_t block = std::size_t{1} << reg.width;
  const double scale = std::pow(M_SQRT1_2, reg.width);
  std::vector<Amplitude> buf(block);
  next.clear();
  next.reserve(untouched + 2 * touched.size());
  next.insert(next.end(), entries_.begin(), mid);

  const std::size_t count = touched.size();
  for (std::size_t pos = 0; pos < count;) {
    const Label rest = touched[order[pos]].label & ~rmask;
    std::fill(buf.begin(), buf.end(), Amplitude{});
    std::size_t group_end = pos;
    for (; group_end < count; ++group_end) {
      const Entry& e = touched[order[group_end]];
      if ((e.label & ~rmask) != rest) break;
      buf[reg.read(e.label)] = e.amp;
    }
    walsh_hadamard(buf.data(), reg.width);
    for (std::size_t v = 0; v < block; ++v) {
      const Amplitude amp = buf[v] * scale;
      if (std::norm(amp) >= kPruneThreshold * kPruneThreshold) {
        next.push_back({rest | (static_cast<Label>(v) << reg.offset), amp});
      }
    }
    if (next.size() > cap_) {
      next.clear();
      throw ResourceError("sparse state support exceeds cap " + std::to_string(cap_));
    }
    pos = group_end;
  }
  entries_.swap(next);
  next.clear();
  check_cap();
}

void SparseState::apply_x(std::string_view reg, std::uint64_t bits, const Control& control) {
  const RegisterRef r = layout_.find(reg);
  const std::uint64_t flip = (bits & low_mask(r.width)) << r.offset;
  const auto [cmask, cval] = control.resolve(layout_);
  if ((cmask & flip) != 0) throw ParameterError("X target overlaps its control");
  permute(cmask, cval, [flip](Label l) { return l ^ flip; });
}

void SparseState::apply_swap(std::string_view a, std::string_view b, const Control& control) {
  const RegisterRef ra = layout_.find(a);
  const RegisterRef rb = layout_.find(b);
  if (ra.width != rb.width) throw ParameterError("swap of registers with different widths");
  if ((ra.mask() & rb.mask()) != 0) throw ParameterError("swap of overlapping registers");
  const auto [cmask, cval] = control.resolve(layout_);
  if ((cmask & (ra.mask() | rb.mask())) != 0) {
    throw ParameterError("swap targets overlap the control");
  }
  permute(cmask, cval, [ra, rb](Label l) {
    const std::uint64_t va = ra.read(l);
    const std::uint64_t vb = rb.read(l);
    return rb.write(ra.write(l, vb), va);
  });
}

namespace {

struct ResolvedBinding {
  std::vector<RegisterRef> inputs;
  RegisterRef out;
};

ResolvedBinding resolve_binding(const OracleBinding& binding, const RegisterLayout& layout) {
  if (!binding.oracle) throw ParameterError("oracle binding without an oracle");
  const oracles::ClassicalOracle& oracle = *binding.oracle;
  ResolvedBinding r;
  std::uint64_t in_mask = 0;
  int in_width = 0;
  for (const std::string& name : binding.inputs) {
    const RegisterRef ref = layout.find(name);
    if ((in_mask & ref.mask()) != 0) throw ParameterError("oracle input registers overlap");
    in_mask |= ref.mask();
    in_width += ref.width;
    r.inputs.push_back(ref);
  }
  r.out = layout.find(binding.output);
  if (in_width != oracle.in_width() || r.out.width != oracle.out_width()) {
    throw ParameterError("binding widths do not match oracle " + oracle.name() + " (" +
                         std::to_string(in_width) + "->" + std::to_string(r.out.width) +
                         " vs " + std::to_string(oracle.in_width()) + "->" +
                         std::to_string(oracle.out_width()) + ")");
  }
  if ((in_mask & r.out.mask()) != 0) {
    throw ParameterError("oracle output register overlaps its inputs");
  }
  return r;
}

}  // namespace

void SparseState::apply_oracle_xor(const OracleBinding& binding, const Control& control) {
  const ResolvedBinding rb = resolve_binding(binding, layout_);
  const oracles::ClassicalOracle& oracle = *binding.oracle;
  const auto [cmask, cval] = control.resolve(layout_);
  if ((cmask & rb.out.mask()) != 0) throw ParameterError("oracle output overlaps the control");
  permute(cmask, cval, [&](Label l) {
    return l ^ (oracle.eval_unchecked(gather(l, rb.inputs)) << rb.out.offset);
  });
}

bool SparseState::apply_conjugated_oracle(const Operation& first, const Operation& middle,
                                          const Operation& last) {
  const auto* h1 = std::get_if<Hadamard>(&first.gate);
  const auto* h2 = std::get_if<Hadamard>(&last.gate);
  const auto* ox = std::get_if<OracleXor>(&middle.gate);
  if (h1 == nullptr || h2 == nullptr || ox == nullptr || h1->reg != h2->reg) return false;
  if (first.control.tests() != middle.control.tests() ||
      first.control.tests() != last.control.tests()) {
    return false;
  }
  const RegisterRef reg = layout_.find(h1->reg);
  const ResolvedBinding rb = resolve_binding(ox->binding, layout_);
  const auto [cmask, cval] = first.control.resolve(layout_);
  const std::uint64_t rmask = reg.mask();
  // Anything unusual goes through the gate-by-gate path, which also reports
  // the errors.
  if ((cmask & (rmask | rb.out.mask())) != 0 || (rb.out.mask() & rmask) != 0) return false;
  if (reg.width + rb.out.width > 12) return false;

  const auto mid = cmask == 0 ? entries_.begin()
                              : std::partition(entries_.begin(), entries_.end(), [&](const Entry& e) {
                                  return (e.label & cmask) != cval;
                                });
  const std::size_t untouched = static_cast<std::size_t>(mid - entries_.begin());
  const std::span<Entry> touched(entries_.data() + untouched, entries_.size() - untouched);

  // Groups share everything except R and the oracle output, since the
  // oracle can move an entry into a neighbouring group's output labels.
  const std::uint64_t omask = rb.out.mask();
  const Label key_mask = ~(rmask | omask);
  thread_local std::vector<std::uint64_t> order;
  thread_local std::vector<Entry> next;
  group_order(touched, key_mask, order);

  const oracles::ClassicalOracle& oracle = *ox->binding.oracle;
  const std::size_t block = std::size_t{1} << reg.width;
  const std::size_t values = std::size_t{1} << rb.out.width;
  const double scale = std::pow(M_SQRT1_2, reg.width);
  constexpr double kPrune2 = kPruneThreshold * kPruneThreshold;
  // One block of amplitudes per output-register value, before the XOR
  // (source) and after it (target), with lists of the blocks in use.
  std::vector<Amplitude> source(values * block);
  std::vector<Amplitude> target(values * block);
  std::vector<std::uint64_t> sources;
  std::vector<std::uint64_t> targets;
  std::vector<char> source_used(values);
  std::vector<char> target_used(values);
  // Oracle values for all of R, cached by the oracle input bits outside R.
  constexpr std::size_t kCacheSlots = 64;
  Label in_rest_mask = 0;
  for (const RegisterRef& r : rb.inputs) in_rest_mask |= r.mask();
  in_rest_mask &= ~rmask;
  std::vector<Label> cache_tag(kCacheSlots);
  std::vector<char> cache_valid(kCacheSlots);
  std::vector<std::uint64_t> cache(kCacheSlots * block);
  const auto oracle_values = [&](Label base) {
    const Label tag = base & in_rest_mask;
    const std::size_t slot = static_cast<std::size_t>((tag * 0x9e3779b97f4a7c15ULL) >> 58);
    std::uint64_t* values_here = cache.data() + slot * block;
    if (!cache_valid[slot] || cache_tag[slot] != tag) {
      for (std::size_t y = 0; y < block; ++y) {
        values_here[y] = oracle.eval_unchecked(
            gather(tag | (static_cast<Label>(y) << reg.offset), rb.inputs));
      }
      cache_valid[slot] = 1;
      cache_tag[slot] = tag;
    }
    return values_here;
  };
  next.clear();
  next.reserve(untouched + 2 * touched.size());
  next.insert(next.end(), entries_.begin(), mid);

  const std::size_t count = touched.size();
  for (std::size_t pos = 0; pos < count;) {
    const Label base = touched[order[pos]].label & key_mask;
    std::size_t group_end = pos;
    for (; group_end < count; ++group_end) {
      const Entry& e = touched[order[group_end]];
      if ((e.label & key_mask) != base) break;
      const std::uint64_t b = rb.out.read(e.label);
      if (!source_used[b]) {
        source_used[b] = 1;
        sources.push_back(b);
      }
      source[b * block + reg.read(e.label)] = e.amp;
    }
    // The oracle input excludes its output register, so its value depends
    // only on R within the group.
    const std::uint64_t* value = oracle_values(base);
    for (std::uint64_t b : sources) {
      Amplitude* buf = source.data() + b * block;
      walsh_hadamard(buf, reg.width);
      for (std::size_t y = 0; y < block; ++y) {
        const Amplitude amp = buf[y] * scale;
        buf[y] = Amplitude{};
        if (std::norm(amp) < kPrune2) continue;
        const std::uint64_t t = b ^ value[y];
        if (!target_used[t]) {
          target_used[t] = 1;
          targets.push_back(t);
        }
        target[t * block + y] += amp;
      }
      source_used[b] = 0;
    }
    sources.clear();
    std::sort(targets.begin(), targets.end());
    for (std::uint64_t t : targets) {
      Amplitude* acc = target.data() + t * block;
      walsh_hadamard(acc, reg.width);
      const Label out_base = base | (t << rb.out.offset);
      for (std::size_t v = 0; v < block; ++v) {
        const Amplitude amp = acc[v] * scale;
        acc[v] = Amplitude{};
        if (std::norm(amp) >= kPrune2) {
          next.push_back({out_base | (static_cast<Label>(v) << reg.offset), amp});
        }
      }
      target_used[t] = 0;
    }
    targets.clear();
    if (next.size() > cap_) {
      next.clear();
      throw ResourceError("sparse state support exceeds cap " + std::to_string(cap_));
    }
    pos = group_end;
  }
  entries_.swap(next);
  next.clear();
  check_cap();
  return true;
}

std::uint64_t SparseState::measure(std::string_view reg, Rng& rng) {
  const RegisterRef r = layout_.find(reg);
  std::map<std::uint64_t, double> probs;
  double total = 0.0;
  for (const Entry& e : entries_) {
    const double p = std::norm(e.amp);
    probs[r.read(e.label)] += p;
    total += p;
  }
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  std::uint64_t outcome = probs.rbegin()->first;
  double chosen = probs.rbegin()->second;
  for (const auto& [value, p] : probs) {
    acc += p;
    if (u < acc) {
      outcome = value;
      chosen = p;
      break;
    }
  }
  const double scale = 1.0 / std::sqrt(chosen);
  std::erase_if(entries_, [&](const Entry& e) { return r.read(e.label) != outcome; });
  for (Entry& e : entries_) e.amp *= scale;
  return outcome;
}

double SparseState::probability(std::string_view reg, std::uint64_t value) const {
  return probability(Control::when(std::string(reg), value));
}

double SparseState::probability(const Control& control) const {
  const auto [cmask, cval] = control.resolve(layout_);
  double total = 0.0;
  for (const Entry& e : entries_) {
    if ((e.label & cmask) == cval) total += std::norm(e.amp);
  }
  return total;
}

std::vector<std::pair<std::uint64_t, double>> SparseState::distribution(
    const std::vector<std::string>& regs) const {
  std::vector<RegisterRef> refs;
  for (const std::string& name : regs) refs.push_back(layout_.find(name));
  std::map<std::uint64_t, double> probs;
  for (const Entry& e : entries_) probs[gather(e.label, refs)] += std::norm(e.amp);
  return {probs.begin(), probs.end()};
}

SparseState SparseState::embedded_in(const RegisterLayout& target) const {
  struct Move {
    RegisterRef from;
    RegisterRef to;
  };
  std::vector<Move> moves;
  for (const Register& r : layout_.registers()) {
    const RegisterRef to = target.find(r.name);
    if (to.width != r.width) {
      throw ParameterError("register " + r.name + " has a different width in the target layout");
    }
    moves.push_back({{r.offset, r.width}, to});
  }
  SparseState out(target, cap_);
  out.entries_.clear();
  out.entries_.reserve(entries_.size());
  for (const Entry& e : entries_) {
    Label l = 0;
    for (const Move& m : moves) l = m.to.write(l, m.from.read(e.label));
    out.entries_.push_back({l, e.amp});
  }
  return out;
}

SparseState SparseState::extract(
    const std::vector<std::pair<std::string, std::string>>& regs) const {
  RegisterLayout reduced;
  std::vector<RegisterRef> refs;
  std::uint64_t taken = 0;
  for (const auto& [from, to] : regs) {
    const RegisterRef r = layout_.find(from);
    reduced.add(to, r.width);
    refs.push_back(r);
    taken |= r.mask();
  }
  SparseState out(reduced, cap_);
  out.entries_.clear();
  const Label rest = entries_.front().label & ~taken;
  for (const Entry& e : entries_) {
    if ((e.label & ~taken) != rest) {
      throw ParameterError("state is entangled with registers outside the extraction");
    }
    out.entries_.push_back({gather(e.label, refs), e.amp});
  }
  return out;
}

Projection SparseState::project_onto(const SparseState& part) const {
  struct Move {
    RegisterRef here;
    RegisterRef there;
  };
  std::vector<Move> moves;
  std::uint64_t covered = 0;
  for (const Register& r : part.layout().registers()) {
    const RegisterRef here = layout_.find(r.name);
    if (here.width != r.width) throw ParameterError("width mismatch for register " + r.name);
    moves.push_back({here, {r.offset, r.width}});
    covered |= here.mask();
  }
  std::unordered_map<Label, Amplitude> target;
  for (const Entry& e : part.entries()) target.emplace(e.label, e.amp);

  std::vector<Entry> acc;
  for (const Entry& e : entries_) {
    Label sub = 0;
    for (const Move& m : moves) sub = m.there.write(sub, m.here.read(e.label));
    const auto it = target.find(sub);
    if (it == target.end()) continue;
    acc.push_back({e.label & ~covered, std::conj(it->second) * e.amp});
  }
  std::sort(acc.begin(), acc.end(), [](const Entry& a, const Entry& b) { return a.label < b.label; });
  std::vector<Entry> merged;
  for (const Entry& e : acc) {
    if (!merged.empty() && merged.back().label == e.label) {
      merged.back().amp += e.amp;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const Entry& e) { return std::abs(e.amp) < kPruneThreshold; });
  double prob = 0.0;
  for (const Entry& e : merged) prob += std::norm(e.amp);

  SparseState remainder(layout_, cap_);
  if (prob > 0.0) {
    const double scale = 1.0 / std::sqrt(prob);
    for (Entry& e : merged) e.amp *= scale;
    remainder.entries_ = std::move(merged);
  }
  return {prob, std::move(remainder)};
}

std::string SparseState::dump() const {
  std::vector<std::string> lines;
  lines.reserve(entries_.size());
  char num[64];
  for (const Entry& e : entries_) {
    std::string line;
    for (const Register& r : layout_.registers()) {
      if (!line.empty()) line += '|';
      line += r.name + "=" + bit_string(RegisterRef{r.offset, r.width}.read(e.label), r.width);
    }
    std::snprintf(num, sizeof num, ": %.12g,%.12g", e.amp.real(), e.amp.imag());
    line += num;
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& l : lines) out += l + "\n";
  return out;
}

Amplitude overlap(const SparseState& a, const SparseState& b) {
  if (!(a.layout() == b.layout())) throw ParameterError("overlap of states with different layouts");
  auto sorted = [](const SparseState& s) {
    std::vector<SparseState::Entry> v = s.entries();
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.label < y.label; });
    return v;
  };
  const auto ea = sorted(a);
  const auto eb = sorted(b);
  Amplitude total{};
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].label < eb[j].label) {
      ++i;
    } else if (eb[j].label < ea[i].label) {
      ++j;
    } else {
      total += std::conj(ea[i].amp) * eb[j].amp;
      ++i;
      ++j;
    }
  }
  return total;
}

double fidelity(const SparseState& a, const SparseState& b) { return std::norm(overlap(a, b)); }

std::vector<Operation> inverse(std::span<const Operation> sequence) {
  std::vector<Operation> out;
  out.reserve(sequence.size());
  for (auto it = sequence.rbegin(); it != sequence.rend(); ++it) {
    if (std::holds_alternative<Measure>(it->gate)) {
      throw ParameterError("cannot invert a sequence containing a measurement");
    }
    out.push_back(*it);
  }
  return out;
}

std::uint64_t footprint(const Operation& op, const RegisterLayout& layout) {
  std::uint64_t mask = op.control.resolve(layout).first;
  std::visit(
      [&](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Swap>) {
          mask |= layout.find(g.a).mask() | layout.find(g.b).mask();
        } else if constexpr (std::is_same_v<G, OracleXor>) {
          for (const auto& in : g.binding.inputs) mask |= layout.find(in).mask();
          mask |= layout.find(g.binding.output).mask();
        } else {
          mask |= layout.find(g.reg).mask();
        }
      },
      op.gate);
  return mask;
}

namespace {

bool same_gate(const Operation& a, const Operation& b) {
  if (a.gate.index() != b.gate.index() || a.control.tests() != b.control.tests()) return false;
  return std::visit(
      [&b](const auto& ga) {
        using G = std::decay_t<decltype(ga)>;
        const G& gb = std::get<G>(b.gate);
        if constexpr (std::is_same_v<G, Hadamard>) {
          return ga.reg == gb.reg;
        } else if constexpr (std::is_same_v<G, FlipBits>) {
          return ga.reg == gb.reg && ga.bits == gb.bits;
        } else if constexpr (std::is_same_v<G, Swap>) {
          return ga.a == gb.a && ga.b == gb.b;
        } else if constexpr (std::is_same_v<G, OracleXor>) {
          return ga.binding.oracle == gb.binding.oracle && ga.binding.inputs == gb.binding.inputs &&
                 ga.binding.output == gb.binding.output;
        } else {
          return false;
        }
      },
      a.gate);
}

}  // namespace

std::vector<Operation> cancel_inverse_pairs(std::span<const Operation> sequence,
                                            const RegisterLayout& layout) {
  std::vector<Operation> out;
  std::vector<std::uint64_t> masks;
  for (const Operation& op : sequence) {
    const bool barrier = std::holds_alternative<Measure>(op.gate);
    const std::uint64_t mask = barrier ? ~std::uint64_t{0} : footprint(op, layout);
    bool cancelled = false;
    for (std::size_t j = out.size(); j-- > 0 && !barrier;) {
      if (same_gate(out[j], op)) {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(j));
        masks.erase(masks.begin() + static_cast<std::ptrdiff_t>(j));
        cancelled = true;
        break;
      }
      if ((masks[j] & mask) != 0) break;
    }
    if (!cancelled) {
      out.push_back(op);
      masks.push_back(mask);
    }
  }
  return out;
}

SparseState tensor(const SparseState& a, const SparseState& b, const RegisterLayout& target) {
  std::uint64_t mask_a = 0;
  for (const Register& r : a.layout().registers()) mask_a |= target.find(r.name).mask();
  for (const Register& r : b.layout().registers()) {
    if ((target.find(r.name).mask() & mask_a) != 0) {
      throw ParameterError("tensor factors share register " + r.name);
    }
  }
  const SparseState wa = a.embedded_in(target);
  const SparseState wb = b.embedded_in(target);
  std::vector<std::pair<Label, Amplitude>> amps;
  amps.reserve(wa.support_size() * wb.support_size());
  for (const auto& x : wa.entries()) {
    for (const auto& y : wb.entries()) amps.emplace_back(x.label | y.label, x.amp * y.amp);
  }
  return SparseState::from_amplitudes(target, amps, false);
}

}  // namespace osslab::sim
