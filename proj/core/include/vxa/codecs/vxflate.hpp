#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "vxa/bytes.hpp"

namespace vxa::codecs {

// LZSS token stream. Each flag byte governs the next eight items, LSB first.
// A clear bit is a literal byte; a set bit is a two-byte match holding the
// little-endian value (offset - 1) | (length - 3) << 12.
inline constexpr std::uint32_t kVxflateWindow = 4096;
inline constexpr std::uint32_t kVxflateMinMatch = 3;
inline constexpr std::uint32_t kVxflateMaxMatch = 18;

class CorruptStream : public std::runtime_error {
 public:
  explicit CorruptStream(const std::string& what)
      : std::runtime_error("corrupt stream: " + what) {}
};

// Greedy longest-match encoder; ties go to the smallest offset.
Bytes encode_vxflate(ByteView input);

// Decodes exactly expected_size bytes. Throws CorruptStream on a match that
// reaches before the start of output, on overshoot, or on early end of input.
Bytes decode_vxflate_host(ByteView stream, std::uint64_t expected_size);

}  // namespace vxa::codecs
