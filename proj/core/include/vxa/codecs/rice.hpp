#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vxa/bytes.hpp"

namespace vxa::codecs {

inline constexpr int kRiceMaxK = 15;
inline constexpr std::uint32_t kRiceMaxQuotient = 1u << 16;

inline std::uint32_t zigzag(std::int32_t r) {
  return (static_cast<std::uint32_t>(r) << 1) ^ static_cast<std::uint32_t>(r >> 31);
}

inline std::int32_t unzigzag(std::uint32_t z) {
  return static_cast<std::int32_t>((z >> 1) ^ (0u - (z & 1)));
}

// Bits needed for z: q ones, a zero, k low bits.
inline std::uint64_t rice_bits(std::uint32_t z, int k) {
  return static_cast<std::uint64_t>(z >> k) + 1 + static_cast<std::uint64_t>(k);
}

// MSB-first bit packer.
class BitWriter {
 public:
  void put_bit(bool bit);
  void put_bits(std::uint32_t value, int count);  // high bit of value first
  void align();
  std::uint64_t bit_count() const { return bits_; }
  const Bytes& bytes() const { return out_; }
  Bytes take();

 private:
  Bytes out_;
  std::uint64_t bits_ = 0;
};

// MSB-first bit cursor. Throws CorruptStream past the end.
class BitReader {
 public:
  explicit BitReader(ByteView data, std::size_t byte_offset = 0)
      : data_(data), pos_(byte_offset * 8) {}

  bool bit();
  std::uint32_t bits(int count);
  // Skips to the next byte boundary and returns its byte offset.
  std::size_t align();
  std::size_t byte_pos() const { return (pos_ + 7) / 8; }

 private:
  ByteView data_;
  std::uint64_t pos_;
};

void rice_encode(std::span<const std::uint32_t> values, int k, BitWriter& out);
Bytes rice_encode(std::span<const std::uint32_t> values, int k);

// Throws CorruptStream when a quotient exceeds kRiceMaxQuotient or the
// bits run out.
std::vector<std::uint32_t> rice_decode(BitReader& in, int k, std::size_t n);
std::vector<std::uint32_t> rice_decode(ByteView bits, int k, std::size_t n);

}  // namespace vxa::codecs
