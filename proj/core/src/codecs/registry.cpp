#include "vxa/codecs/registry.hpp"

#include <stdexcept>
#include <string>

#include "vxa/codecs/bundled.hpp"
#include "vxa/codecs/pcm1.hpp"
#include "vxa/codecs/rle.hpp"
#include "vxa/codecs/vxflate.hpp"
#include "vxa/codecs/vxsf.hpp"

namespace vxa::codecs {

ByteView bundled_decoder(std::string_view name) {
  for (std::size_t i = 0; i < detail::kEmbeddedImageCount; ++i) {
    const auto& e = detail::kEmbeddedImages[i];
    if (name == e.name) return {e.data, e.size};
  }
  throw std::out_of_range("no bundled decoder named '" + std::string(name) + "'");
}

const char* to_string(Disposition d) {
  switch (d) {
    case Disposition::kCompress: return "compress";
    case Disposition::kStorePrecompressed: return "store-precompressed";
    case Disposition::kStorePlain: return "store-plain";
  }
  return "?";
}

ByteView CodecDescriptor::decoder_image() const { return bundled_decoder(name); }

Registry::Registry() {
  using container::make_codec_name;

  CodecDescriptor pcm1;
  pcm1.name = "pcm1";
  pcm1.tag = make_codec_name("pcm1");
  pcm1.method = container::kMethodSpecial;
  pcm1.recognize = [](ByteView p, std::uint64_t total) {
    return parse_canonical_wav(p, total).has_value();
  };
  pcm1.encode = encode_pcm1;
  pcm1.host_decode = [](ByteView s, std::uint64_t) { return decode_pcm1_host(s); };
  pcm1.output_format_note = "WAV";
  codecs_.push_back(std::move(pcm1));

  CodecDescriptor vxsf;
  vxsf.name = "vxsf";
  vxsf.tag = make_codec_name("vxsf");
  vxsf.method = container::kMethodStore;
  vxsf.kind = CodecKind::kRedec;
  vxsf.recognize = [](ByteView p, std::uint64_t) { return looks_like_vxsf(p); };
  vxsf.host_decode = [](ByteView s, std::uint64_t) { return decode_vxsf_host(s); };
  vxsf.output_format_note = "raw bytes";
  codecs_.push_back(std::move(vxsf));

  CodecDescriptor vxflate;
  vxflate.name = "vxflate";
  vxflate.tag = make_codec_name("vxflate");
  vxflate.method = container::kMethodVxflate;
  vxflate.recognize = [](ByteView, std::uint64_t) { return true; };
  vxflate.encode = encode_vxflate;
  vxflate.host_decode = decode_vxflate_host;
  vxflate.output_format_note = "raw bytes";
  codecs_.push_back(std::move(vxflate));

  CodecDescriptor rle;
  rle.name = "rle";
  rle.tag = make_codec_name("rle");
  rle.method = container::kMethodRle;
  rle.recognize = [](ByteView, std::uint64_t) { return false; };
  rle.encode = encode_rle;
  rle.host_decode = [](ByteView s, std::uint64_t) { return decode_rle_host(s); };
  rle.output_format_note = "raw bytes";
  codecs_.push_back(std::move(rle));
}

const Registry& Registry::builtin() {
  static const Registry registry;
  return registry;
}

const CodecDescriptor* Registry::find(std::string_view name) const {
  for (const auto& c : codecs_)
    if (c.name == name) return &c;
  return nullptr;
}

const CodecDescriptor* Registry::find_by_tag(const container::CodecName& tag) const {
  for (const auto& c : codecs_)
    if (c.tag == tag) return &c;
  return nullptr;
}

RecognitionResult Registry::recognize(ByteView prefix, std::string_view,
                                      std::uint64_t total_size) const {
  for (const auto& c : codecs_) {
    if (c.recognize(prefix, total_size))
      return {&c, c.kind == CodecKind::kRedec ? Disposition::kStorePrecompressed
                                              : Disposition::kCompress};
  }
  return {};
}

}  // namespace vxa::codecs
