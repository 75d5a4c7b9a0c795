#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vxa/bytes.hpp"
#include "vxa/container/archive.hpp"

namespace vxa::codecs {

enum class CodecKind { kFull, kRedec };

enum class Disposition { kCompress, kStorePrecompressed, kStorePlain };

const char* to_string(Disposition d);

struct CodecDescriptor {
  std::string name;  // trimmed, e.g. "vxflate"
  container::CodecName tag{};
  std::uint16_t method = 0;
  CodecKind kind = CodecKind::kFull;
  // Sees the input prefix (or whole file) and the full input length.
  std::function<bool(ByteView prefix, std::uint64_t total_size)> recognize;
  // Absent for redecs.
  std::function<Bytes(ByteView)> encode;
  // Host reference decoder: stream as stored -> decoded bytes.
  std::function<Bytes(ByteView stream, std::uint64_t expected_size)> host_decode;
  std::string output_format_note;

  ByteView decoder_image() const;
};

struct RecognitionResult {
  const CodecDescriptor* codec = nullptr;
  Disposition disposition = Disposition::kStorePlain;
};

class Registry {
 public:
  static const Registry& builtin();

  const std::vector<CodecDescriptor>& codecs() const { return codecs_; }
  const CodecDescriptor* find(std::string_view name) const;
  const CodecDescriptor* find_by_tag(const container::CodecName& tag) const;

  // pcm1 WAV check, then the vxsf redec check, else vxflate.
  RecognitionResult recognize(ByteView prefix, std::string_view filename,
                              std::uint64_t total_size) const;
  RecognitionResult recognize(ByteView whole_file, std::string_view filename) const {
    return recognize(whole_file, filename, whole_file.size());
  }

 private:
  Registry();
  std::vector<CodecDescriptor> codecs_;
};

}  // namespace vxa::codecs
