#pragma once

#include <cstdint>

#include "vxa/bytes.hpp"

namespace vxa::codecs {

inline constexpr std::size_t kVxsfHeaderSize = 12;

// "VXSF", uncompressed size u64, vxflate tokens.
Bytes encode_vxsf(ByteView raw);
bool looks_like_vxsf(ByteView prefix);
Bytes decode_vxsf_host(ByteView stream);

}  // namespace vxa::codecs
