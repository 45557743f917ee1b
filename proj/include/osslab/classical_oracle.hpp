#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "osslab/common.hpp"

namespace osslab::oracles {

/// A deterministic total map from in_width-bit inputs to out_width-bit outputs.
///
/// Inputs and outputs follow the global bit convention; multi-field inputs are
/// the concatenation of their fields, first field in the low bits.
class ClassicalOracle {
 public:
  using Function = std::function<std::uint64_t(std::uint64_t)>;

  ClassicalOracle(std::string name, int in_width, int out_width, Function fn);

  const std::string& name() const { return name_; }
  int in_width() const { return in_width_; }
  int out_width() const { return out_width_; }

  /// Evaluates the oracle. Throws ParameterError when the input has bits
  /// above in_width.
  std::uint64_t operator()(std::uint64_t input) const;

  /// Evaluation without the range check, for hot loops whose inputs are
  /// already masked.
  std::uint64_t eval_unchecked(std::uint64_t input) const { return fn_(input) & out_mask_; }

 private:
  std::string name_;
  int in_width_;
  int out_width_;
  std::uint64_t out_mask_;
  Function fn_;
};

using OraclePtr = std::shared_ptr<const ClassicalOracle>;

inline OraclePtr make_oracle(std::string name, int in_width, int out_width,
                             ClassicalOracle::Function fn) {
  return std::make_shared<const ClassicalOracle>(std::move(name), in_width, out_width,
                                                 std::move(fn));
}

}  // namespace osslab::oracles
