#include "osslab/classical_oracle.hpp"

namespace osslab::oracles {

ClassicalOracle::ClassicalOracle(std::string name, int in_width, int out_width, Function fn)
    : name_(std::move(name)),
      in_width_(in_width),
      out_width_(out_width),
      out_mask_(low_mask(out_width)),
      fn_(std::move(fn)) {
  if (in_width < 1 || in_width > 64 || out_width < 1 || out_width > 64) {
    throw ParameterError("oracle " + name_ + ": widths must be in [1, 64]");
  }
  if (!fn_) throw ParameterError("oracle " + name_ + ": empty function");
}

std::uint64_t ClassicalOracle::operator()(std::uint64_t input) const {
  if ((input & ~low_mask(in_width_)) != 0) {
    throw ParameterError("oracle " + name_ + ": input wider than " + std::to_string(in_width_) +
                         " bits");
  }
  return eval_unchecked(input);
}

}  // namespace osslab::oracles
