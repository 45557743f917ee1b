#include "osslab/common.hpp"
#include "osslab/random.hpp"

namespace osslab {

std::string bit_string(std::uint64_t bits, int width) {
  std::string out(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if (bit_at(bits, i)) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

std::uint64_t parse_bits(const std::string& text) {
  if (text.size() > 64) throw ParameterError("bit string longer than 64 entries");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      bits |= std::uint64_t{1} << i;
    } else if (text[i] != '0') {
      throw ParameterError("bit string may only contain '0' and '1': " + text);
    }
  }
  return bits;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("Rng::below requires a positive bound");
  // Rejection sampling on the largest multiple of bound.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

std::uint64_t Rng::bits(int width) {
  if (width <= 0) return 0;
  return engine_() & low_mask(width);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ stream) ^ index);
}

}  // namespace osslab
