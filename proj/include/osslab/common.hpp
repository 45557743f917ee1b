#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace osslab {

// Bit-string convention used everywhere in this project: a bit string of
// width w is held in the low w bits of a std::uint64_t, and bit i of the
// word is entry i of the string ("first bit" == bit 0). Concatenation a || b
// puts a in the low bits and b directly above it.

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or preconditions (bad dimensions, widths, bounds).
class ParameterError : public Error {
  using Error::Error;
};

class DimensionError : public ParameterError {
  using ParameterError::ParameterError;
};

/// A configured resource limit (support cap, enumeration guard) was hit.
class ResourceError : public Error {
  using Error::Error;
};

/// Corrupt or truncated persisted data, or a malformed oracle output.
class FormatError : public Error {
  using Error::Error;
};

class VersionError : public FormatError {
  using FormatError::FormatError;
};

/// A game stage touched an oracle outside its declared access set.
class RestrictionViolation : public Error {
  using Error::Error;
};

constexpr std::uint64_t low_mask(int width) {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

constexpr bool bit_at(std::uint64_t word, int i) { return (word >> i) & 1U; }

/// Renders the low `width` bits, entry 0 first.
std::string bit_string(std::uint64_t bits, int width);

/// Parses a string of '0'/'1' characters, entry 0 first.
std::uint64_t parse_bits(const std::string& text);

}  // namespace osslab
