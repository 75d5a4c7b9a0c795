#pragma once

#include "vxa/bytes.hpp"

namespace vxa::codecs {

// (run_len, value) pairs with 1 <= run_len <= 255.
Bytes encode_rle(ByteView input);
// Throws CorruptStream on a zero run length or a dangling count byte.
Bytes decode_rle_host(ByteView stream);

}  // namespace vxa::codecs
