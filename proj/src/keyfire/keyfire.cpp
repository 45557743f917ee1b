#include "osslab/keyfire.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace osslab::keyfire {

using oracles::OssInstance;
using oracles::OssParams;
using sim::Control;
using sim::Operation;
namespace ops = sim::ops;

namespace {

std::vector<std::pair<sim::Label, sim::Amplitude>> amplitudes_of(const sim::SparseState& s) {
  std::vector<std::pair<sim::Label, sim::Amplitude>> out;
  out.reserve(s.support_size());
  for (const auto& e : s.entries()) out.emplace_back(e.label, e.amp);
  return out;
}

void measure_and_reset(sim::SparseState& s, const std::string& reg, Rng& rng) {
  const std::uint64_t v = s.measure(reg, rng);
  if (v != 0) s.apply_x(reg, v);
}

void append(std::vector<Operation>& out, std::vector<Operation> more) {
  for (auto& op : more) out.push_back(std::move(op));
}

}  // namespace

sim::RegisterLayout clone_layout(const KeyFireParams& p) {
  p.validate();
  sim::RegisterLayout layout;
  oss::add_workspace(layout, p.oss, kFlamePrefix);
  layout.add(kMsg, 1);
  oss::add_sign_ancillas(layout, kSignPrefix, p.jmax);
  layout.add(kOra4, p.attestation_width()).add(kOra5, p.attestation_width());
  oss::add_workspace(layout, p.oss, kClonePrefix);
  return layout;
}

SetupResult setup(const KeyFireParams& params, Rng& rng) {
  params.validate();
  KeyFireInstance inst = oracles::gen_keyfire_oracles(params, rng);
  sim::SparseState flame = oss::gen_qkey_purified(inst.oss());
  return {std::move(inst), std::move(flame)};
}

GoodInstance find_good_instance(const KeyFireParams& params, Rng& rng, int max_draws) {
  params.validate();
  for (int draw = 0; draw < max_draws; ++draw) {
    KeyFireInstance inst = oracles::gen_keyfire_oracles(params, rng);
    bool all_good = true;
    for (std::uint64_t y = 0; y < (std::uint64_t{1} << params.oss.r) && all_good; ++y) {
      all_good = inst.oss().is_good_key(y);
    }
    if (all_good) return {std::move(inst), draw};
  }
  throw ResourceError("no instance with only good keys in " + std::to_string(max_draws) + " draws");
}

sim::SparseState rename_workspace(const sim::SparseState& state, const OssParams& p,
                                  const std::string& from, const std::string& to) {
  if (!(state.layout() == oss::workspace_layout(p, from))) {
    throw ParameterError("state is not on the workspace layout with prefix '" + from + "'");
  }
  return sim::SparseState::from_amplitudes(oss::workspace_layout(p, to), amplitudes_of(state),
                                           false);
}

sim::SparseState compact_flame(const OssInstance& inst, const std::string& prefix) {
  const OssParams& p = inst.params();
  sim::RegisterLayout layout;
  layout.add(prefix + "vk", p.r).add(prefix + "key", p.k);
  const double amp = std::pow(2.0, -0.5 * p.n);
  std::vector<std::pair<sim::Label, sim::Amplitude>> amps;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << p.n); ++x) {
    const auto [y, v] = inst.P(x);
    amps.emplace_back(y | (v << p.r), amp);
  }
  return sim::SparseState::from_amplitudes(layout, amps, false);
}

Attestation attestation_probe(const KeyFireInstance& inst, sim::SparseState& flame,
                              std::uint64_t z, Rng& rng, const std::string& prefix,
                              SignMode mode) {
  const KeyFireParams& kp = inst.params();
  const OssParams& p = kp.oss;
  if (z > low_mask(p.dispatch_in_width())) throw ParameterError("z is wider than a dispatch input");

  const sim::RegisterLayout original = flame.layout();
  sim::RegisterLayout layout = original;
  layout.add("kf.msg", 1).add("kf.z", p.dispatch_in_width()).add("kf.att", kp.attestation_width());
  oss::add_sign_ancillas(layout, "kf.", kp.jmax);
  sim::SparseState s = flame.embedded_in(layout);
  s.apply_x("kf.z", z);

  Attestation out;
  out.ivk = s.measure(prefix + "vk", rng);
  const oss::SignRegisters regs = oss::sign_registers(prefix, "kf.", "kf.msg");
  const std::vector<Operation> sign = oss::coherent_sign_ops(inst.oss(), regs, kp.jmax, mode);
  for (int b = 0; b < 2; ++b) {
    if (b == 1) s.apply_x("kf.msg");
    s.apply(sign);
    s.apply_oracle_xor({b == 0 ? inst.O0_oracle() : inst.O1_oracle(),
                        {prefix + "vk", prefix + "key", "kf.z"},
                        "kf.att"});
    s.apply_inverse(sign);
    const std::uint64_t y = s.measure("kf.att", rng);
    (b == 0 ? out.y0 : out.y1) = y;
    if (y != 0) s.apply_x("kf.att", y);
    if (b == 1) s.apply_x("kf.msg");
    measure_and_reset(s, "kf.aux2", rng);
  }
  s.apply_x("kf.z", z);

  // Everything added above is back to zero and sits above the original bits.
  flame = sim::SparseState::from_amplitudes(original, amplitudes_of(s), false);
  return out;
}

KfSignature kf_sign(const KeyFireInstance& inst, sim::SparseState& flame, std::uint64_t m,
                    Rng& rng, const std::string& prefix, SignMode mode) {
  const KeyFireParams& kp = inst.params();
  if (m > low_mask(kp.nu)) throw ParameterError("message wider than nu bits");
  KfSignature out;
  out.attestation = attestation_probe(inst, flame, m, rng, prefix, mode);
  const Attestation& a = out.attestation;
  const oracles::Decoded d = oracles::bottom_decode(inst.O3(a.ivk, a.y0, a.y1, m), kp.sig);
  if (d.valid) out.signature = d.payload;
  return out;
}

bool kf_verify(const KeyFireInstance& inst, std::uint64_t m, std::uint64_t sig) {
  return inst.O4(m, sig);
}

std::vector<Operation> attestation_dance_ops(const KeyFireInstance& inst,
                                             const DanceRegisters& regs, SignMode mode) {
  const KeyFireParams& kp = inst.params();
  const oss::SignRegisters sregs = oss::sign_registers(regs.src, regs.sign_prefix, regs.msg);
  const std::vector<Operation> sign = oss::coherent_sign_ops(inst.oss(), sregs, kp.jmax, mode);
  const std::vector<Operation> unsign = sim::inverse(sign);
  const std::vector<std::string> attest_in{regs.src + "vk", regs.src + "key", regs.dst + "qin"};
  const Operation o0 = ops::oracle_xor({inst.O0_oracle(), attest_in, regs.ora4});
  const Operation o1 = ops::oracle_xor({inst.O1_oracle(), attest_in, regs.ora5});
  const Operation o2 = ops::oracle_xor(
      {inst.O2_oracle(), {regs.src + "vk", regs.ora4, regs.ora5, regs.dst + "qin"}, regs.dst + "qout"});
  const Operation toggle = ops::flip(regs.msg);

  std::vector<Operation> out;
  append(out, sign);
  out.push_back(o0);
  append(out, unsign);
  out.push_back(toggle);
  append(out, sign);
  out.push_back(o1);
  out.push_back(o2);
  out.push_back(o1);
  append(out, unsign);
  out.push_back(toggle);
  append(out, sign);
  out.push_back(o0);
  append(out, unsign);
  return out;
}

std::vector<Operation> clone_ops(const KeyFireInstance& inst, const DanceRegisters& regs,
                                 SignMode mode) {
  const std::vector<Operation> dance = attestation_dance_ops(inst, regs, mode);
  std::vector<Operation> out;
  for (int round = 0; round < oss::kGenQKeyQueries; ++round) {
    append(out, oss::genqkey_round(inst.params().oss, regs.dst, round));
    append(out, dance);
  }
  append(out, oss::genqkey_finalize(regs.dst));
  return out;
}

sim::SparseState take_copy(const sim::SparseState& state, const OssParams& p,
                           const std::string& prefix, Rng& rng) {
  const sim::RegisterLayout target = oss::workspace_layout(p, "");
  sim::SparseState s = state;
  std::vector<std::pair<std::string, std::string>> keep;
  for (const sim::Register& r : s.layout().registers()) {
    if (r.name.rfind(prefix, 0) == 0) {
      keep.emplace_back(r.name, r.name.substr(prefix.size()));
    } else {
      s.measure(r.name, rng);
    }
  }
  const sim::SparseState reduced = s.extract(keep);
  if (!(reduced.layout().registers() == target.registers())) {
    throw ParameterError("prefix '" + prefix + "' does not name a workspace");
  }
  return sim::SparseState::from_amplitudes(target, amplitudes_of(reduced), false);
}

double clone_budget(const KeyFireParams& p) {
  return 16.0 * oss::kGenQKeyQueries * std::pow(2.0, -p.jmax);
}

CloneResult kf_clone(const KeyFireInstance& inst, const sim::SparseState& flame, SignMode mode) {
  const KeyFireParams& kp = inst.params();
  const sim::RegisterLayout layout = clone_layout(kp);
  CloneResult out{rename_workspace(flame, kp.oss, "", kFlamePrefix).embedded_in(layout)};
  out.state.apply(sim::cancel_inverse_pairs(clone_ops(inst, DanceRegisters{}, mode), layout));

  const sim::SparseState ideal_f = oss::ideal_flame(inst.oss(), kFlamePrefix);
  const sim::SparseState ideal_c = oss::ideal_flame(inst.oss(), kClonePrefix);
  out.fidelity = sim::fidelity(sim::tensor(ideal_f, ideal_c, layout), out.state);
  out.ancilla_zero_weight = out.state.probability(Control()
                                                      .require(kMsg, 0)
                                                      .require(std::string(kSignPrefix) + "aux2", 0)
                                                      .require(kOra4, 0)
                                                      .require(kOra5, 0));
  out.source_fidelity = out.state.project_onto(ideal_f).probability;
  out.clone_fidelity = out.state.project_onto(ideal_c).probability;
  return out;
}

IterationCheck clone_iteration_check_direct(const KeyFireInstance& inst,
                                            const sim::SparseState& zeta, int round,
                                            SignMode mode) {
  const KeyFireParams& kp = inst.params();
  const sim::RegisterLayout layout = clone_layout(kp);
  const sim::SparseState flame = oss::ideal_flame(inst.oss(), kFlamePrefix);
  const std::vector<Operation> work = oss::genqkey_round(kp.oss, kClonePrefix, round);

  sim::SparseState actual = sim::tensor(flame, zeta, layout);
  actual.apply(work);
  actual.apply(attestation_dance_ops(inst, DanceRegisters{}, mode));

  sim::SparseState direct = zeta;
  direct.apply(work);
  direct.apply(oss::genqkey_query(inst.oss(), kClonePrefix));
  const sim::SparseState expected = sim::tensor(flame, direct, layout);

  IterationCheck out;
  out.overlap_squared = sim::fidelity(expected, actual);
  out.deficit = 1.0 - out.overlap_squared;
  return out;
}

// Projection of the dance output on flame (x) zeros (x) |z, q> for each q.
struct CloneIterationChecker::Slice {
  std::map<std::uint64_t, sim::Amplitude> by_qout;
};

CloneIterationChecker::CloneIterationChecker(KeyFireInstance inst, SignMode mode)
    : inst_(std::move(inst)),
      mode_(mode),
      layout_(clone_layout(inst_.params())),
      dance_(attestation_dance_ops(inst_, DanceRegisters{}, mode)) {
  // The opening sign block reads nothing from the clone workspace.
  const std::uint64_t cmask = layout_.find(std::string(kClonePrefix) + "qin").mask() |
                              layout_.find(std::string(kClonePrefix) + "qout").mask();
  while (shared_prefix_ < dance_.size() &&
         (sim::footprint(dance_[shared_prefix_], layout_) & cmask) == 0) {
    ++shared_prefix_;
  }
}

const CloneIterationChecker::Slice& CloneIterationChecker::slice(std::uint64_t z) {
  for (const auto& [key, value] : slices_) {
    if (key == z) return *value;
  }
  const std::string c = kClonePrefix;
  const sim::SparseState flame = oss::ideal_flame(inst_.oss(), kFlamePrefix);
  if (!after_prefix_) {
    after_prefix_ = flame.embedded_in(layout_);
    after_prefix_->apply(std::span(dance_).first(shared_prefix_));
  }
  sim::SparseState s = *after_prefix_;
  s.apply_x(c + "qin", z);
  s.apply(std::span(dance_).subspan(shared_prefix_));

  // The flame occupies the lowest bits of the clone layout.
  const std::uint64_t fmask = low_mask(flame.layout().total_width());
  const sim::RegisterRef qin = layout_.find(c + "qin");
  const sim::RegisterRef qout = layout_.find(c + "qout");
  std::unordered_map<sim::Label, sim::Amplitude> flame_amp;
  for (const auto& e : flame.entries()) flame_amp.emplace(e.label, e.amp);

  auto out = std::make_shared<Slice>();
  for (const auto& e : s.entries()) {
    const sim::Label rest = e.label & ~fmask & ~qout.mask();
    if (rest != qin.write(0, z)) continue;
    const auto it = flame_amp.find(e.label & fmask);
    if (it == flame_amp.end()) continue;
    out->by_qout[qout.read(e.label)] += std::conj(it->second) * e.amp;
  }
  slices_.emplace_back(z, out);
  return *slices_.back().second;
}

IterationCheck CloneIterationChecker::check(const sim::SparseState& zeta, int round) {
  const std::string c = kClonePrefix;
  const std::vector<Operation> work = oss::genqkey_round(inst_.params().oss, c, round);
  sim::SparseState before = zeta;
  before.apply(work);
  sim::SparseState direct = before;
  direct.apply(oss::genqkey_query(inst_.oss(), c));

  const sim::RegisterRef qin = before.layout().find(c + "qin");
  const sim::RegisterRef qout = before.layout().find(c + "qout");
  // Slice amplitudes keyed by (z, qout).
  std::map<std::uint64_t, std::map<std::uint64_t, sim::Amplitude>> phi;
  std::map<std::uint64_t, std::map<std::uint64_t, sim::Amplitude>> expected;
  for (const auto& e : before.entries()) phi[qin.read(e.label)][qout.read(e.label)] += e.amp;
  for (const auto& e : direct.entries()) expected[qin.read(e.label)][qout.read(e.label)] += e.amp;

  // <flame, 0, z, q'| X_qout(o) W_z> = A_z(q' xor o), summed against the
  // expected slice.
  sim::Amplitude total{};
  for (const auto& [z, slice_phi] : phi) {
    const auto found = expected.find(z);
    if (found == expected.end()) continue;
    const Slice& w = slice(z);
    for (const auto& [q, exp_amp] : found->second) {
      sim::Amplitude act{};
      for (const auto& [o, amp] : slice_phi) {
        const auto a = w.by_qout.find(q ^ o);
        if (a != w.by_qout.end()) act += amp * a->second;
      }
      total += std::conj(exp_amp) * act;
    }
  }
  IterationCheck out;
  out.overlap_squared = std::norm(total);
  out.deficit = 1.0 - out.overlap_squared;
  return out;
}

IterationCheck clone_iteration_check(const KeyFireInstance& inst, const sim::SparseState& zeta,
                                     int round, SignMode mode) {
  return CloneIterationChecker(inst, mode).check(zeta, round);
}

sim::SparseState random_workspace_state(const OssParams& p, int support, Rng& rng) {
  const sim::RegisterLayout layout = oss::workspace_layout(p, kClonePrefix);
  const int width = layout.total_width();
  if (support < 1 || static_cast<std::uint64_t>(support) > (std::uint64_t{1} << width)) {
    throw ParameterError("support must be between 1 and the number of labels");
  }
  std::vector<std::pair<sim::Label, sim::Amplitude>> amps;
  std::vector<sim::Label> used;
  while (static_cast<int>(amps.size()) < support) {
    const sim::Label l = rng.bits(width);
    if (std::find(used.begin(), used.end(), l) != used.end()) continue;
    used.push_back(l);
    const double re = 2 * rng.uniform01() - 1;
    const double im = 2 * rng.uniform01() - 1;
    amps.emplace_back(l, sim::Amplitude(re, im));
  }
  return sim::SparseState::from_amplitudes(layout, amps, true);
}

ChainResult clone_chain(const KeyFireInstance& inst, int depth, SignMode mode) {
  const KeyFireParams& kp = inst.params();
  kp.validate();
  if (depth < 1) throw ParameterError("chain depth must be at least 1");
  const OssParams& p = kp.oss;
  const std::string src = "k.";
  const std::string c = kClonePrefix;

  sim::RegisterLayout layout;
  layout.add(src + "vk", p.r).add(src + "key", p.k);
  layout.add(kMsg, 1);
  oss::add_sign_ancillas(layout, kSignPrefix, kp.jmax);
  layout.add(kOra4, kp.attestation_width()).add(kOra5, kp.attestation_width());
  oss::add_workspace(layout, p, c);

  // Everything except the clone's vk and key, as a zero state.
  sim::RegisterLayout spent;
  for (const std::string& reg : {std::string(kMsg), std::string(kSignPrefix) + "flag",
                                 std::string(kSignPrefix) + "mark", std::string(kOra4),
                                 std::string(kOra5), c + "sel", c + "pm", c + "oflag", c + "oy",
                                 c + "ovlo", c + "ovhi"}) {
    spent.add(reg, layout.find(reg).width);
  }
  const sim::SparseState spent_zero(spent);
  const sim::SparseState source_flame = compact_flame(inst.oss(), src);
  const std::vector<Operation> ops = sim::cancel_inverse_pairs(
      clone_ops(inst, DanceRegisters{src, c, kSignPrefix, kMsg, kOra4, kOra5}, mode), layout);

  ChainResult out;
  out.joint_lower_bound = 1.0;
  sim::SparseState s = source_flame.embedded_in(layout);
  auto check = [&out](sim::Projection proj, std::vector<double>& into) {
    into.push_back(proj.probability);
    out.joint_lower_bound *= proj.probability;
    return std::move(proj.remainder);
  };
  for (int i = 0; i < depth; ++i) {
    s.apply(ops);
    s = check(s.project_onto(source_flame), out.copy_fidelity);
    if (i + 1 == depth) break;
    s = check(s.project_onto(spent_zero), out.ancilla_zero);
    s.apply_swap(c + "vk", src + "vk");
    s.apply_swap(c + "key", src + "key");
  }
  out.copy_fidelity.push_back(s.project_onto(oss::ideal_flame(inst.oss(), c)).probability);
  out.joint_lower_bound *= out.copy_fidelity.back();
  out.threshold = 1.0 - (2.0 * depth - 1.0) * clone_budget(kp);
  out.passed = out.joint_lower_bound >= out.threshold;
  return out;
}

}  // namespace osslab::keyfire
