#include "osslab/oss.hpp"

#include <cmath>

namespace osslab::oss {

using sim::Control;
using sim::Operation;
namespace ops = sim::ops;

void add_workspace(sim::RegisterLayout& layout, const OssParams& p, const std::string& prefix) {
  p.validate();
  const int lo = p.n - p.r;
  const int hi = p.k - lo;
  auto name = [&prefix](const char* s) { return prefix + s; };
  layout.add(name("sel"), 2)
      .add(name("py"), p.r)
      .add(name("pvlo"), lo)
      .add(name("pvhi"), hi)
      .add(name("pm"), 1)
      .add(name("oflag"), 1)
      .add(name("oy"), p.r)
      .add(name("ovlo"), lo)
      .add(name("ovhi"), hi);
  layout.alias(name("qin"), {name("sel"), name("py"), name("pvlo"), name("pvhi"), name("pm")})
      .alias(name("qout"), {name("oflag"), name("oy"), name("ovlo"), name("ovhi")})
      .alias(name("vk"), {name("py")})
      .alias(name("key"), {name("pvlo"), name("pvhi")})
      .alias(name("xfield"), {name("py"), name("pvlo")});
}

sim::RegisterLayout workspace_layout(const OssParams& p, const std::string& prefix) {
  sim::RegisterLayout layout;
  add_workspace(layout, p, prefix);
  return layout;
}

std::vector<Operation> genqkey_round(const OssParams& p, const std::string& prefix, int round) {
  p.validate();
  const auto sel = prefix + "sel";
  if (round == 0) {
    return {ops::hadamard(prefix + "xfield"), ops::flip(sel, static_cast<std::uint64_t>(oracles::Sel::P))};
  }
  if (round == 1) {
    // Move (y, v) into the payload and x into qout, then select P^-1.
    return {ops::swap(prefix + "oy", prefix + "py"), ops::swap(prefix + "ovlo", prefix + "pvlo"),
            ops::swap(prefix + "ovhi", prefix + "pvhi"),
            ops::flip(sel, static_cast<std::uint64_t>(oracles::Sel::P) ^
                               static_cast<std::uint64_t>(oracles::Sel::Pinv))};
  }
  throw ParameterError("GenQKey has rounds 0 and 1 only");
}

Operation genqkey_query(const OssInstance& inst, const std::string& prefix) {
  return ops::oracle_xor({inst.dispatch_oracle(), {prefix + "qin"}, prefix + "qout"});
}

std::vector<Operation> genqkey_finalize(const std::string& prefix) {
  return {ops::flip(prefix + "sel", static_cast<std::uint64_t>(oracles::Sel::Pinv))};
}

std::vector<Operation> genqkey_circuit(const OssInstance& inst, const std::string& prefix) {
  std::vector<Operation> out;
  for (int round = 0; round < kGenQKeyQueries; ++round) {
    for (auto& op : genqkey_round(inst.params(), prefix, round)) out.push_back(std::move(op));
    out.push_back(genqkey_query(inst, prefix));
  }
  for (auto& op : genqkey_finalize(prefix)) out.push_back(std::move(op));
  return out;
}

sim::SparseState gen_qkey_purified(const OssInstance& inst, const std::string& prefix) {
  sim::SparseState state(workspace_layout(inst.params(), prefix));
  state.apply(genqkey_circuit(inst, prefix));
  return state;
}

sim::SparseState ideal_flame(const OssInstance& inst, const std::string& prefix) {
  const OssParams& p = inst.params();
  const sim::RegisterLayout layout = workspace_layout(p, prefix);
  const sim::RegisterRef vk = layout.find(prefix + "vk");
  const sim::RegisterRef key = layout.find(prefix + "key");
  const double amp = std::pow(2.0, -0.5 * p.n);
  std::vector<std::pair<sim::Label, sim::Amplitude>> amps;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << p.n); ++x) {
    const auto [y, v] = inst.P(x);
    amps.emplace_back(key.write(vk.write(0, y), v), amp);
  }
  return sim::SparseState::from_amplitudes(layout, amps, false);
}

sim::SparseState coset_state(const OssInstance& inst, std::uint64_t y) {
  sim::RegisterLayout layout;
  layout.add("key", inst.params().k);
  const auto members = gf2::enumerate_coset(inst.A(y), inst.b(y));
  const double amp = 1.0 / std::sqrt(static_cast<double>(members.size()));
  std::vector<std::pair<sim::Label, sim::Amplitude>> amps;
  for (const auto& v : members) amps.emplace_back(v.bits(), amp);
  return sim::SparseState::from_amplitudes(layout, amps, false);
}

OssKey gen_qkey(const OssInstance& inst, Rng& rng) {
  sim::SparseState state = gen_qkey_purified(inst);
  const std::uint64_t vk = state.measure("vk", rng);
  return {vk, state.extract({{"key", "key"}})};
}

SignOutcome sign_detailed(const OssInstance& inst, OssKey key, bool m, int jmax, Rng& rng) {
  if (jmax < 1) throw ParameterError("jmax must be at least 1");
  const OssParams& p = inst.params();
  sim::RegisterLayout layout;
  layout.add("key", p.k).add("vk", p.r).add("mark", 1);
  sim::SparseState state = key.state.embedded_in(layout);
  state.apply_x("vk", key.vk);
  const sim::OracleBinding mark{inst.sign_mark_oracle(), {"vk", "key"}, "mark"};

  SignOutcome out;
  for (int j = 0; j < jmax; ++j) {
    if (state.measure("key[0]", rng) == static_cast<std::uint64_t>(m)) {
      out.final_key = state.measure("key", rng);
      out.signature = out.final_key;
      out.success_iteration = j;
      return out;
    }
    state.apply_hadamard("key");
    state.apply_oracle_xor(mark);
    if (state.measure("mark", rng) == 1) state.apply_x("mark");
    state.apply_hadamard("key");
  }
  out.final_key = state.measure("key", rng);
  return out;
}

std::optional<std::uint64_t> sign(const OssInstance& inst, OssKey key, bool m, int jmax, Rng& rng) {
  return sign_detailed(inst, std::move(key), m, jmax, rng).signature;
}

bool verify(const OssInstance& inst, std::uint64_t vk, bool m, std::uint64_t sig) {
  return inst.D0(vk, m, sig);
}

std::vector<std::uint64_t> enumerate_signatures(const OssInstance& inst, std::uint64_t vk, bool m) {
  std::vector<std::uint64_t> out;
  for (const auto& v : gf2::enumerate_coset(inst.A(vk), inst.b(vk))) {
    if (v.first() == m) out.push_back(v.bits());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void add_sign_ancillas(sim::RegisterLayout& layout, const std::string& prefix, int jmax) {
  if (jmax < 1) throw ParameterError("jmax must be at least 1");
  layout.add(prefix + "flag", jmax).add(prefix + "mark", jmax);
  layout.alias(prefix + "aux2", {prefix + "flag", prefix + "mark"});
}

SignRegisters sign_registers(const std::string& workspace_prefix, const std::string& ancilla_prefix,
                             const std::string& msg) {
  return {workspace_prefix + "vk", workspace_prefix + "key", msg, ancilla_prefix + "flag",
          ancilla_prefix + "mark"};
}

oracles::OraclePtr signing_shift_oracle(const OssInstance& inst) {
  const OssParams& p = inst.params();
  return oracles::make_oracle("SignShift", p.r, p.k,
                              [inst](std::uint64_t vk) { return inst.signing_shift(vk); });
}

std::vector<Operation> coherent_sign_ops(const OssInstance& inst, const SignRegisters& regs,
                                         int jmax, SignMode mode) {
  if (jmax < 1) throw ParameterError("jmax must be at least 1");
  const std::string first_bit = regs.key + "[0]";
  auto slice = [](const std::string& reg, int lo, int hi) {
    return reg + "[" + std::to_string(lo) + ":" + std::to_string(hi) + "]";
  };
  auto bit = [](const std::string& reg, int i) { return reg + "[" + std::to_string(i) + "]"; };

  std::vector<Operation> out;
  if (mode == SignMode::ExactSurrogate) {
    for (std::uint64_t mv = 0; mv < 2; ++mv) {
      out.push_back(ops::flip(bit(regs.flag, 0), 1,
                              Control().require(first_bit, mv).require(regs.m, mv)));
    }
    out.push_back(ops::oracle_xor({signing_shift_oracle(inst), {regs.vk}, regs.key},
                                  Control::when(bit(regs.flag, 0), 0)));
    return out;
  }

  const oracles::OraclePtr mark = inst.sign_mark_oracle();
  for (int j = 0; j < jmax; ++j) {
    for (std::uint64_t mv = 0; mv < 2; ++mv) {
      Control c = Control().require(first_bit, mv).require(regs.m, mv);
      if (j > 0) c.require(slice(regs.flag, 0, j), 0);
      out.push_back(ops::flip(bit(regs.flag, j), 1, std::move(c)));
    }
    const Control pending = Control::when(slice(regs.flag, 0, j + 1), 0);
    out.push_back(ops::hadamard(regs.key, pending));
    out.push_back(ops::oracle_xor({mark, {regs.vk, regs.key}, bit(regs.mark, j)}, pending));
    out.push_back(ops::hadamard(regs.key, pending));
  }
  return out;
}

CoherentSignTranscript coherent_sign(sim::SparseState& state, const OssInstance& inst,
                                     const SignRegisters& regs, int jmax, SignMode mode) {
  const double clean = state.probability(Control().require(regs.flag, 0).require(regs.mark, 0));
  if (clean < 1.0 - 1e-9) throw ParameterError("signing ancillas are not zeroed");
  CoherentSignTranscript t{coherent_sign_ops(inst, regs, jmax, mode), {regs.flag, regs.mark}};
  state.apply(t.ops);
  return t;
}

}  // namespace osslab::oss
