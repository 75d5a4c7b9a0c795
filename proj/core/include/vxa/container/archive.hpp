#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vxa/bytes.hpp"

namespace vxa::container {

inline constexpr std::uint32_t kLocalMagic = 0x04035856;
inline constexpr std::uint32_t kCentralMagic = 0x02015856;
inline constexpr std::uint32_t kEndMagic = 0x06055856;
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint16_t kFlagPseudo = 0x0001;
inline constexpr std::uint16_t kVxaExtensionId = 0x5658;

inline constexpr std::size_t kLocalFixedSize = 4 + 2 + 2 + 2 + 4 + 8 + 8 + 2 + 2;
inline constexpr std::size_t kCentralFixedSize = kLocalFixedSize + 8;
inline constexpr std::size_t kEndRecordSize = 4 + 8 + 8 + 8;

enum Method : std::uint16_t {
  kMethodStore = 0,
  kMethodVxflate = 8,
  kMethodRle = 9,
  kMethodSpecial = 0x5658,
};

bool is_known_method(std::uint16_t method);
std::string method_name(std::uint16_t method);

using CodecName = std::array<char, 8>;

// Space-pads or truncates to eight bytes.
CodecName make_codec_name(std::string_view name);
// Trailing spaces removed.
std::string codec_name_string(const CodecName& name);

struct ExtensionField {
  std::uint16_t id = 0;
  Bytes payload;

  friend bool operator==(const ExtensionField&, const ExtensionField&) = default;
};

struct VxaExtension {
  std::uint64_t decoder_offset = 0;
  CodecName codec_name{};

  ExtensionField to_field() const;
  static std::optional<VxaExtension> from_field(const ExtensionField& f);

  friend bool operator==(const VxaExtension&, const VxaExtension&) = default;
};

// Fields shared by local and central headers.
struct EntryHeader {
  std::uint16_t version = kFormatVersion;
  std::uint16_t flags = 0;
  std::uint16_t method = kMethodStore;
  std::uint32_t crc32 = 0;
  std::uint64_t compressed_size = 0;
  std::uint64_t uncompressed_size = 0;
  std::string name;
  std::vector<ExtensionField> extensions;

  bool is_pseudo() const { return (flags & kFlagPseudo) != 0; }
  std::optional<VxaExtension> vxa() const;

  friend bool operator==(const EntryHeader&, const EntryHeader&) = default;
};

// A central-directory entry (or, from scan_local_entries, a local header).
struct Entry {
  EntryHeader header;
  std::uint64_t local_header_offset = 0;

  const std::string& name() const { return header.name; }
};

struct EndRecord {
  std::uint64_t entry_count = 0;
  std::uint64_t cd_offset = 0;
  std::uint64_t cd_size = 0;
};

enum class ArchiveErrorKind {
  kNotAnArchive,
  kCorruptEndRecord,
  kCentralDirectoryOutOfBounds,
  kBadMagic,
  kCorruptCentralDirectory,
  kCorruptLocalHeader,
  kHeaderMismatch,
  kTruncatedPayload,
  kNotPseudoFile,
  kMissingDecoder,
  kDecoderCorrupt,
  kInvalidDecoderImage,
  kInvalidEntry,
  kDuplicateName,
  kWriterFinalized,
  kIo,
};

const char* to_string(ArchiveErrorKind kind);

class ArchiveError : public std::runtime_error {
 public:
  ArchiveError(ArchiveErrorKind kind, std::uint64_t offset, const std::string& detail);

  ArchiveErrorKind kind() const { return kind_; }
  std::uint64_t offset() const { return offset_; }

 private:
  ArchiveErrorKind kind_;
  std::uint64_t offset_;
};

// Sequential archive writer. Entries and decoder pseudo-files are appended
// in call order; finalize() writes the central directory (actual files only,
// in write order) and the end record.
class ArchiveWriter {
 public:
  explicit ArchiveWriter(const std::filesystem::path& path);
  explicit ArchiveWriter(std::ostream& out);

  ArchiveWriter(const ArchiveWriter&) = delete;
  ArchiveWriter& operator=(const ArchiveWriter&) = delete;

  // Appends one actual file and returns the offset of its local header.
  // `compressed` is the payload as stored; for method 0 it must equal
  // `uncompressed`. The CRC covers `uncompressed`.
  std::uint64_t write_entry(std::string_view name, std::uint16_t method, ByteView uncompressed,
                            ByteView compressed, std::optional<VxaExtension> decoder = {});

  // Stores a decoder image once per distinct content; later calls with the
  // same bytes return the first offset. Throws isa::ImageError when the
  // image does not validate.
  std::uint64_t write_decoder_pseudofile(ByteView image_bytes);

  std::uint64_t finalize();

  std::uint64_t offset() const { return offset_; }
  std::size_t pseudo_file_count() const { return pseudo_offsets_.size(); }
  bool finalized() const { return finalized_; }

 private:
  void check_open() const;
  void emit(ByteView bytes);
  Bytes encode_local(const EntryHeader& h) const;

  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
  std::uint64_t offset_ = 0;
  bool finalized_ = false;
  std::vector<Entry> central_;
  std::set<std::string, std::less<>> names_;
  std::set<std::uint64_t> pseudo_offsets_;
  std::unordered_map<std::string, std::uint64_t> decoder_by_content_;
  std::vector<std::pair<std::uint64_t, std::string>> pending_refs_;  // offset, entry name
};

// Read-only view of a complete archive. Safe for concurrent readers; the
// decoder cache is internally synchronised.
class Archive {
 public:
  static Archive open(const std::filesystem::path& path);
  static Archive from_bytes(Bytes bytes);

  const std::vector<Entry>& entries() const { return entries_; }
  const EndRecord& end_record() const { return end_; }
  std::uint64_t size() const { return data_->size(); }
  ByteView bytes() const { return *data_; }

  // Parses the local header at `offset`. `payload_offset` receives the
  // offset of the first payload byte.
  EntryHeader read_local_header(std::uint64_t offset, std::uint64_t* payload_offset = nullptr) const;

  // Exactly compressed_size bytes following the entry's local header.
  ByteView read_entry_stream(const Entry& entry) const;

  // Throws kHeaderMismatch when the local header disagrees with the
  // central-directory copy.
  void verify_entry_headers(const Entry& entry) const;

  // Decompressed, CRC-checked and validated decoder image for the entry's
  // VXA extension. Cached per decoder offset.
  std::shared_ptr<const Bytes> locate_decoder(const Entry& entry) const;
  std::shared_ptr<const Bytes> locate_decoder_at(std::uint64_t offset) const;
  std::size_t decoder_cache_size() const;

  // Walks local headers from offset 0 up to the central directory,
  // including decoder pseudo-files.
  std::vector<Entry> scan_local_entries() const;

 private:
  struct DecoderCache {
    std::mutex mu;
    std::map<std::uint64_t, std::shared_ptr<const Bytes>> images;
  };

  Archive() = default;
  void parse();

  std::shared_ptr<const Bytes> data_;
  EndRecord end_;
  std::vector<Entry> entries_;
  std::unique_ptr<DecoderCache> cache_;
};

}  // namespace vxa::container
