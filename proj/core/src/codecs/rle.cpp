#include "vxa/codecs/rle.hpp"

#include "vxa/codecs/vxflate.hpp"

namespace vxa::codecs {

Bytes encode_rle(ByteView input) {
  Bytes out;
  out.reserve(input.size() / 4 + 2);
  std::size_t i = 0;
  while (i < input.size()) {
    const std::uint8_t v = input[i];
    std::size_t run = 1;
    while (run < 255 && i + run < input.size() && input[i + run] == v) ++run;
    out.push_back(static_cast<std::uint8_t>(run));
    out.push_back(v);
    i += run;
  }
  return out;
}

Bytes decode_rle_host(ByteView stream) {
  if (stream.size() % 2 != 0) throw CorruptStream("rle: dangling run length");
  Bytes out;
  for (std::size_t i = 0; i < stream.size(); i += 2) {
    if (stream[i] == 0) throw CorruptStream("rle: zero run length");
    out.insert(out.end(), stream[i], stream[i + 1]);
  }
  return out;
}

}  // namespace vxa::codecs
