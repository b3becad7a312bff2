#include "csifb/bits.hpp"

#include <string>

#include "csifb/errors.hpp"

namespace csifb {

unsigned ceil_log2(std::uint64_t n) {
  unsigned w = 0;
  while (w < 64 && (std::uint64_t{1} << w) < n) ++w;
  return w;
}

void append_bits(BitString& bits, std::uint32_t value, unsigned width) {
  for (unsigned i = width; i-- > 0;) bits.push_back(((value >> i) & 1U) != 0);
}

std::uint32_t read_bits(const BitString& bits, std::size_t& pos, unsigned width) {
  if (bits.size() < pos + width)
    throw DecodeError("bit string too short: need " + std::to_string(pos + width) +
                          " bits, have " + std::to_string(bits.size()),
                      pos / 8);
  std::uint32_t v = 0;
  for (unsigned i = 0; i < width; ++i) v = (v << 1) | (bits[pos++] ? 1U : 0U);
  return v;
}

std::vector<std::uint8_t> to_bytes(const BitString& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
  return out;
}

BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() * 8 < count)
    throw DecodeError("byte stream truncated: need " + std::to_string(count) + " bits",
                      bytes.size());
  BitString out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (bytes[i / 8] & (0x80U >> (i % 8))) != 0;
  return out;
}

}  // namespace csifb
