#include "vxa/codecs/vxsf.hpp"

#include <cstring>

#include "vxa/codecs/vxflate.hpp"

namespace vxa::codecs {

Bytes encode_vxsf(ByteView raw) {
  Bytes out;
  ByteWriter w(out);
  w.bytes(as_bytes("VXSF"));
  w.u64(raw.size());
  w.bytes(encode_vxflate(raw));
  return out;
}

bool looks_like_vxsf(ByteView prefix) {
  return prefix.size() >= kVxsfHeaderSize && std::memcmp(prefix.data(), "VXSF", 4) == 0;
}

Bytes decode_vxsf_host(ByteView stream) {
  if (!looks_like_vxsf(stream)) throw CorruptStream("vxsf: bad magic");
  ByteReader r(stream, 4);
  const std::uint64_t size = r.u64();
  return decode_vxflate_host(stream.subspan(kVxsfHeaderSize), size);
}

}  // namespace vxa::codecs
