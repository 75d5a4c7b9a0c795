#pragma once

#include <cstddef>
#include <string_view>

#include "vxa/bytes.hpp"

namespace vxa::codecs {

// Assembled guest decoder shipped with the library. Names are "vxflate",
// "vxsf", "rle" and "pcm1". Throws std::out_of_range for any other name.
ByteView bundled_decoder(std::string_view name);

namespace detail {
struct EmbeddedImage {
  const char* name;
  const unsigned char* data;
  std::size_t size;
};
extern const EmbeddedImage kEmbeddedImages[];
extern const std::size_t kEmbeddedImageCount;
}  // namespace detail

}  // namespace vxa::codecs
