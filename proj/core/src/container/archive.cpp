#include "vxa/container/archive.hpp"

#include <algorithm>
#include <cstdio>

#include "vxa/codecs/vxflate.hpp"
#include "vxa/container/crc32.hpp"
#include "vxa/isa/image.hpp"

namespace vxa::container {
namespace {

constexpr std::uint64_t kMaxDecoderImage = 64ull << 20;
constexpr std::size_t kEndScanWindow = 65536 + kEndRecordSize;

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

Bytes encode_extensions(const std::vector<ExtensionField>& exts) {
  Bytes out;
  ByteWriter w(out);
  for (const auto& e : exts) {
    w.u16(e.id);
    w.u16(static_cast<std::uint16_t>(e.payload.size()));
    w.bytes(e.payload);
  }
  return out;
}

std::vector<ExtensionField> parse_extensions(ByteView area, std::uint64_t base) {
  std::vector<ExtensionField> out;
  ByteReader r(area);
  try {
    while (!r.at_end()) {
      ExtensionField f;
      f.id = r.u16();
      const std::uint16_t size = r.u16();
      auto payload = r.take(size);
      f.payload.assign(payload.begin(), payload.end());
      out.push_back(std::move(f));
    }
  } catch (const TruncatedInput& e) {
    throw ArchiveError(ArchiveErrorKind::kCorruptLocalHeader, base + e.offset(),
                       "extension field overruns extension area");
  }
  return out;
}

// Fixed fields shared by local and central headers, after the magic.
struct FixedFields {
  EntryHeader header;
  std::uint16_t name_len = 0;
  std::uint16_t ext_len = 0;
};

FixedFields read_fixed(ByteReader& r) {
  FixedFields f;
  f.header.version = r.u16();
  f.header.flags = r.u16();
  f.header.method = r.u16();
  f.header.crc32 = r.u32();
  f.header.compressed_size = r.u64();
  f.header.uncompressed_size = r.u64();
  f.name_len = r.u16();
  f.ext_len = r.u16();
  return f;
}

void write_fixed(ByteWriter& w, const EntryHeader& h, std::uint16_t ext_len) {
  w.u16(h.version);
  w.u16(h.flags);
  w.u16(h.method);
  w.u32(h.crc32);
  w.u64(h.compressed_size);
  w.u64(h.uncompressed_size);
  w.u16(static_cast<std::uint16_t>(h.name.size()));
  w.u16(ext_len);
}

}  // namespace

bool is_known_method(std::uint16_t m) {
  return m == kMethodStore || m == kMethodVxflate || m == kMethodRle || m == kMethodSpecial;
}

std::string method_name(std::uint16_t m) {
  switch (m) {
    case kMethodStore: return "store";
    case kMethodVxflate: return "vxflate";
    case kMethodRle: return "rle";
    case kMethodSpecial: return "vxa";
    default: return "method-" + std::to_string(m);
  }
}

CodecName make_codec_name(std::string_view name) {
  CodecName n;
  n.fill(' ');
  std::copy_n(name.begin(), std::min<std::size_t>(name.size(), n.size()), n.begin());
  return n;
}

std::string codec_name_string(const CodecName& name) {
  std::string s(name.begin(), name.end());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
  return s;
}

ExtensionField VxaExtension::to_field() const {
  ExtensionField f;
  f.id = kVxaExtensionId;
  ByteWriter w(f.payload);
  w.u64(decoder_offset);
  w.bytes(as_bytes(std::string_view(codec_name.data(), codec_name.size())));
  return f;
}

std::optional<VxaExtension> VxaExtension::from_field(const ExtensionField& f) {
  if (f.id != kVxaExtensionId || f.payload.size() != 16) return std::nullopt;
  VxaExtension x;
  ByteReader r(f.payload);
  x.decoder_offset = r.u64();
  auto name = r.take(8);
  std::copy(name.begin(), name.end(), x.codec_name.begin());
  return x;
}

std::optional<VxaExtension> EntryHeader::vxa() const {
  for (const auto& e : extensions)
    if (auto x = VxaExtension::from_field(e)) return x;
  return std::nullopt;
}

const char* to_string(ArchiveErrorKind kind) {
  switch (kind) {
    case ArchiveErrorKind::kNotAnArchive: return "not an archive";
    case ArchiveErrorKind::kCorruptEndRecord: return "corrupt end record";
    case ArchiveErrorKind::kCentralDirectoryOutOfBounds: return "central directory out of bounds";
    case ArchiveErrorKind::kBadMagic: return "bad magic";
    case ArchiveErrorKind::kCorruptCentralDirectory: return "corrupt central directory";
    case ArchiveErrorKind::kCorruptLocalHeader: return "corrupt local header";
    case ArchiveErrorKind::kHeaderMismatch: return "header mismatch";
    case ArchiveErrorKind::kTruncatedPayload: return "truncated payload";
    case ArchiveErrorKind::kNotPseudoFile: return "not a decoder pseudo-file";
    case ArchiveErrorKind::kMissingDecoder: return "missing decoder";
    case ArchiveErrorKind::kDecoderCorrupt: return "corrupt decoder";
    case ArchiveErrorKind::kInvalidDecoderImage: return "invalid decoder image";
    case ArchiveErrorKind::kInvalidEntry: return "invalid entry";
    case ArchiveErrorKind::kDuplicateName: return "duplicate name";
    case ArchiveErrorKind::kWriterFinalized: return "writer already finalized";
    case ArchiveErrorKind::kIo: return "i/o error";
  }
  return "unknown";
}

ArchiveError::ArchiveError(ArchiveErrorKind kind, std::uint64_t offset, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + " at offset " + hex(offset) +
                         (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      offset_(offset) {}

// ---- writer -------------------------------------------------------------------

ArchiveWriter::ArchiveWriter(const std::filesystem::path& path)
    : file_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
  if (!*file_) throw ArchiveError(ArchiveErrorKind::kIo, 0, "cannot create " + path.string());
  out_ = file_.get();
}

ArchiveWriter::ArchiveWriter(std::ostream& out) : out_(&out) {}

void ArchiveWriter::check_open() const {
  if (finalized_) throw ArchiveError(ArchiveErrorKind::kWriterFinalized, offset_, "");
}

void ArchiveWriter::emit(ByteView bytes) {
  out_->write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!*out_) throw ArchiveError(ArchiveErrorKind::kIo, offset_, "write failed");
  offset_ += bytes.size();
}

Bytes ArchiveWriter::encode_local(const EntryHeader& h) const {
  const Bytes ext = encode_extensions(h.extensions);
  if (ext.size() > 0xFFFF)
    throw ArchiveError(ArchiveErrorKind::kInvalidEntry, offset_, "extension area exceeds 65535 bytes");
  Bytes out;
  ByteWriter w(out);
  w.u32(kLocalMagic);
  write_fixed(w, h, static_cast<std::uint16_t>(ext.size()));
  w.bytes(as_bytes(h.name));
  w.bytes(ext);
  return out;
}

std::uint64_t ArchiveWriter::write_entry(std::string_view name, std::uint16_t method,
                                         ByteView uncompressed, ByteView compressed,
                                         std::optional<VxaExtension> decoder) {
  check_open();
  if (name.empty()) throw ArchiveError(ArchiveErrorKind::kInvalidEntry, offset_, "empty name");
  if (name.size() > 0xFFFF)
    throw ArchiveError(ArchiveErrorKind::kInvalidEntry, offset_, "name longer than 65535 bytes");
  if (names_.count(name))
    throw ArchiveError(ArchiveErrorKind::kDuplicateName, offset_, std::string(name));
  if (!is_known_method(method))
    throw ArchiveError(ArchiveErrorKind::kInvalidEntry, offset_, "unknown method " + std::to_string(method));
  if (method == kMethodStore &&
      (compressed.size() != uncompressed.size() ||
       !std::equal(compressed.begin(), compressed.end(), uncompressed.begin())))
    throw ArchiveError(ArchiveErrorKind::kInvalidEntry, offset_, "stored payload differs from input");
  if (method == kMethodSpecial && !decoder)
    throw ArchiveError(ArchiveErrorKind::kMissingDecoder, offset_, "method 0x5658 requires a decoder");
  if (decoder) {
    if (decoder->decoder_offset < offset_ && !pseudo_offsets_.count(decoder->decoder_offset))
      throw ArchiveError(ArchiveErrorKind::kNotPseudoFile, offset_,
                         "decoder offset " + hex(decoder->decoder_offset) + " is not a pseudo-file");
    if (decoder->decoder_offset >= offset_) pending_refs_.emplace_back(decoder->decoder_offset, name);
  }

  Entry e;
  e.local_header_offset = offset_;
  e.header.method = method;
  e.header.crc32 = crc32(uncompressed);
  e.header.compressed_size = compressed.size();
  e.header.uncompressed_size = uncompressed.size();
  e.header.name = std::string(name);
  if (decoder) e.header.extensions.push_back(decoder->to_field());

  emit(encode_local(e.header));
  emit(compressed);
  names_.insert(e.header.name);
  central_.push_back(std::move(e));
  return central_.back().local_header_offset;
}

std::uint64_t ArchiveWriter::write_decoder_pseudofile(ByteView image_bytes) {
  check_open();
  isa::validate_image(image_bytes);
  const std::string key = vxa::to_string(image_bytes);
  if (auto it = decoder_by_content_.find(key); it != decoder_by_content_.end()) return it->second;

  const Bytes packed = codecs::encode_vxflate(image_bytes);
  EntryHeader h;
  h.flags = kFlagPseudo;
  h.method = kMethodVxflate;
  h.crc32 = crc32(image_bytes);
  h.compressed_size = packed.size();
  h.uncompressed_size = image_bytes.size();

  const std::uint64_t at = offset_;
  emit(encode_local(h));
  emit(packed);
  pseudo_offsets_.insert(at);
  decoder_by_content_.emplace(key, at);
  return at;
}

std::uint64_t ArchiveWriter::finalize() {
  check_open();
  for (const auto& [off, name] : pending_refs_) {
    if (!pseudo_offsets_.count(off))
      throw ArchiveError(ArchiveErrorKind::kInvalidEntry, off,
                         "entry '" + name + "' references a decoder that was never written");
  }
  Bytes cd;
  ByteWriter w(cd);
  for (const auto& e : central_) {
    const Bytes ext = encode_extensions(e.header.extensions);
    w.u32(kCentralMagic);
    write_fixed(w, e.header, static_cast<std::uint16_t>(ext.size()));
    w.u64(e.local_header_offset);
    w.bytes(as_bytes(e.header.name));
    w.bytes(ext);
  }
  const std::uint64_t cd_offset = offset_;
  emit(cd);
  Bytes end;
  ByteWriter ew(end);
  ew.u32(kEndMagic);
  ew.u64(central_.size());
  ew.u64(cd_offset);
  ew.u64(cd.size());
  emit(end);
  out_->flush();
  if (!*out_) throw ArchiveError(ArchiveErrorKind::kIo, offset_, "flush failed");
  if (file_) file_->close();
  finalized_ = true;
  return offset_;
}

// ---- reader -------------------------------------------------------------------

Archive Archive::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError(ArchiveErrorKind::kIo, 0, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ArchiveError(ArchiveErrorKind::kIo, 0, "read failed: " + path.string());
  return from_bytes(std::move(data));
}

Archive Archive::from_bytes(Bytes bytes) {
  Archive a;
  a.data_ = std::make_shared<const Bytes>(std::move(bytes));
  a.cache_ = std::make_unique<DecoderCache>();
  a.parse();
  return a;
}

void Archive::parse() {
  const Bytes& d = *data_;
  if (d.size() < 4) throw ArchiveError(ArchiveErrorKind::kNotAnArchive, 0, "file too short");

  // The end record is the last occurrence of its magic in the tail window.
  std::optional<std::size_t> at;
  const std::size_t lowest = d.size() > kEndScanWindow ? d.size() - kEndScanWindow : 0;
  for (std::size_t p = d.size() - 4;; --p) {
    if (load_le32(d.data() + p) == kEndMagic) {
      at = p;
      break;
    }
    if (p == lowest) break;
  }
  if (!at) throw ArchiveError(ArchiveErrorKind::kNotAnArchive, d.size(), "no end record");
  if (*at + kEndRecordSize != d.size())
    throw ArchiveError(ArchiveErrorKind::kCorruptEndRecord, *at,
                       "end record must be exactly " + std::to_string(kEndRecordSize) +
                           " bytes at end of file");

  ByteReader er(d, *at + 4);
  end_.entry_count = er.u64();
  end_.cd_offset = er.u64();
  end_.cd_size = er.u64();
  if (end_.cd_offset > *at || end_.cd_size > *at - end_.cd_offset)
    throw ArchiveError(ArchiveErrorKind::kCentralDirectoryOutOfBounds, *at,
                       "cd_offset " + hex(end_.cd_offset) + " size " + hex(end_.cd_size));
  if (end_.cd_offset + end_.cd_size != *at)
    throw ArchiveError(ArchiveErrorKind::kCorruptEndRecord, *at,
                       "central directory does not end at the end record");
  if (end_.entry_count > end_.cd_size / kCentralFixedSize)
    throw ArchiveError(ArchiveErrorKind::kCorruptEndRecord, *at, "entry count exceeds directory size");

  ByteView cd(d.data() + end_.cd_offset, static_cast<std::size_t>(end_.cd_size));
  ByteReader r(cd);
  std::set<std::string, std::less<>> seen;
  try {
    for (std::uint64_t i = 0; i < end_.entry_count; ++i) {
      const std::uint64_t here = end_.cd_offset + r.pos();
      if (r.u32() != kCentralMagic)
        throw ArchiveError(ArchiveErrorKind::kBadMagic, here, "expected central directory entry");
      FixedFields f = read_fixed(r);
      Entry e;
      e.header = std::move(f.header);
      e.local_header_offset = r.u64();
      e.header.name = vxa::to_string(r.take(f.name_len));
      e.header.extensions = parse_extensions(r.take(f.ext_len), end_.cd_offset + r.pos());
      if (e.header.is_pseudo() || e.header.name.empty())
        throw ArchiveError(ArchiveErrorKind::kCorruptCentralDirectory, here,
                           "pseudo-file listed in central directory");
      if (e.local_header_offset >= end_.cd_offset)
        throw ArchiveError(ArchiveErrorKind::kCorruptCentralDirectory, here,
                           "local header offset past central directory");
      if (!seen.insert(e.header.name).second)
        throw ArchiveError(ArchiveErrorKind::kCorruptCentralDirectory, here,
                           "duplicate name '" + e.header.name + "'");
      entries_.push_back(std::move(e));
    }
  } catch (const TruncatedInput& e) {
    throw ArchiveError(ArchiveErrorKind::kCorruptCentralDirectory, end_.cd_offset + e.offset(),
                       "entry overruns central directory");
  } catch (const ArchiveError& e) {
    if (e.kind() == ArchiveErrorKind::kCorruptLocalHeader)
      throw ArchiveError(ArchiveErrorKind::kCorruptCentralDirectory, e.offset(), "bad extension area");
    throw;
  }
  if (!r.at_end())
    throw ArchiveError(ArchiveErrorKind::kCorruptCentralDirectory, end_.cd_offset + r.pos(),
                       "trailing bytes in central directory");
}

EntryHeader Archive::read_local_header(std::uint64_t offset, std::uint64_t* payload_offset) const {
  const Bytes& d = *data_;
  if (offset >= d.size())
    throw ArchiveError(ArchiveErrorKind::kCorruptLocalHeader, offset, "offset beyond end of archive");
  ByteReader r(d, static_cast<std::size_t>(offset));
  try {
    if (r.u32() != kLocalMagic) throw ArchiveError(ArchiveErrorKind::kBadMagic, offset, "expected local header");
    FixedFields f = read_fixed(r);
    EntryHeader h = std::move(f.header);
    h.name = vxa::to_string(r.take(f.name_len));
    const std::uint64_t ext_base = r.pos();
    h.extensions = parse_extensions(r.take(f.ext_len), ext_base);
    if (payload_offset) *payload_offset = r.pos();
    return h;
  } catch (const TruncatedInput& e) {
    throw ArchiveError(ArchiveErrorKind::kCorruptLocalHeader, offset, "header truncated");
  }
}

ByteView Archive::read_entry_stream(const Entry& entry) const {
  std::uint64_t payload = 0;
  read_local_header(entry.local_header_offset, &payload);
  const std::uint64_t limit = std::min<std::uint64_t>(end_.cd_offset, data_->size());
  if (payload > limit || entry.header.compressed_size > limit - payload)
    throw ArchiveError(ArchiveErrorKind::kTruncatedPayload, payload,
                       "payload of '" + entry.name() + "' runs past the archive data");
  return ByteView(data_->data() + payload, static_cast<std::size_t>(entry.header.compressed_size));
}

void Archive::verify_entry_headers(const Entry& entry) const {
  const EntryHeader local = read_local_header(entry.local_header_offset);
  if (!(local == entry.header))
    throw ArchiveError(ArchiveErrorKind::kHeaderMismatch, entry.local_header_offset,
                       "local header of '" + entry.name() + "' differs from central directory");
}

std::shared_ptr<const Bytes> Archive::locate_decoder(const Entry& entry) const {
  auto x = entry.header.vxa();
  if (!x)
    throw ArchiveError(ArchiveErrorKind::kMissingDecoder, entry.local_header_offset,
                       "'" + entry.name() + "' has no VXA extension");
  return locate_decoder_at(x->decoder_offset);
}

std::shared_ptr<const Bytes> Archive::locate_decoder_at(std::uint64_t offset) const {
  {
    std::lock_guard lock(cache_->mu);
    if (auto it = cache_->images.find(offset); it != cache_->images.end()) return it->second;
  }
  if (offset >= end_.cd_offset)
    throw ArchiveError(ArchiveErrorKind::kNotPseudoFile, offset, "decoder offset outside entry area");
  std::uint64_t payload = 0;
  const EntryHeader h = read_local_header(offset, &payload);
  if (!h.is_pseudo() || !h.name.empty())
    throw ArchiveError(ArchiveErrorKind::kNotPseudoFile, offset, "header is an actual file");
  if (h.method != kMethodVxflate)
    throw ArchiveError(ArchiveErrorKind::kDecoderCorrupt, offset, "decoder not stored with vxflate");
  if (h.uncompressed_size > kMaxDecoderImage)
    throw ArchiveError(ArchiveErrorKind::kDecoderCorrupt, offset, "decoder image size implausible");
  if (payload > end_.cd_offset || h.compressed_size > end_.cd_offset - payload)
    throw ArchiveError(ArchiveErrorKind::kTruncatedPayload, payload, "decoder payload truncated");

  Bytes image;
  try {
    image = codecs::decode_vxflate_host(
        ByteView(data_->data() + payload, static_cast<std::size_t>(h.compressed_size)),
        h.uncompressed_size);
  } catch (const codecs::CorruptStream& e) {
    throw ArchiveError(ArchiveErrorKind::kDecoderCorrupt, offset, e.what());
  }
  if (crc32(image) != h.crc32)
    throw ArchiveError(ArchiveErrorKind::kDecoderCorrupt, offset, "decoder CRC mismatch");
  try {
    isa::validate_image(image);
  } catch (const isa::ImageError& e) {
    throw ArchiveError(ArchiveErrorKind::kInvalidDecoderImage, offset, e.what());
  }

  auto shared = std::make_shared<const Bytes>(std::move(image));
  std::lock_guard lock(cache_->mu);
  return cache_->images.emplace(offset, std::move(shared)).first->second;
}

std::size_t Archive::decoder_cache_size() const {
  std::lock_guard lock(cache_->mu);
  return cache_->images.size();
}

std::vector<Entry> Archive::scan_local_entries() const {
  std::vector<Entry> out;
  std::uint64_t off = 0;
  while (off < end_.cd_offset) {
    std::uint64_t payload = 0;
    Entry e;
    e.header = read_local_header(off, &payload);
    e.local_header_offset = off;
    if (e.header.compressed_size > end_.cd_offset - std::min(payload, end_.cd_offset))
      throw ArchiveError(ArchiveErrorKind::kTruncatedPayload, payload, "payload runs into central directory");
    off = payload + e.header.compressed_size;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace vxa::container
