/**
 * @file bits.hpp
 * @brief MSB-first bit strings used for control bits and codeword payloads.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace csifb {

using BitString = std::vector<bool>;

/// Smallest w with 2^w >= n (0 for n <= 1).
unsigned ceil_log2(std::uint64_t n);

/// Appends the low `width` bits of value, most significant first.
void append_bits(BitString& bits, std::uint32_t value, unsigned width);

/// Reads `width` bits starting at `pos` and advances it. Throws DecodeError
/// past the end.
std::uint32_t read_bits(const BitString& bits, std::size_t& pos, unsigned width);

/// MSB-first within each byte, zero-padded at the end.
std::vector<std::uint8_t> to_bytes(const BitString& bits);
/// First `count` bits of `bytes`. Throws DecodeError if too short.
BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t count);

}  // namespace csifb
