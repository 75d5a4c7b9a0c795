#include "vxa/isa/image.hpp"

#include <algorithm>
#include <cstdio>

#include "vxa/isa/instruction.hpp"

namespace vxa::isa {
namespace {

constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kSegmentHeaderSize = 20;

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

const char* to_string(ImageErrorKind kind) {
  switch (kind) {
    case ImageErrorKind::kBadMagic: return "BadMagic";
    case ImageErrorKind::kMalformed: return "Malformed";
    case ImageErrorKind::kOverlappingSegments: return "OverlappingSegments";
    case ImageErrorKind::kWxViolation: return "WxViolation";
    case ImageErrorKind::kEntryNotExecutable: return "EntryNotExecutable";
    case ImageErrorKind::kLimitExceeded: return "LimitExceeded";
  }
  return "unknown";
}

std::uint64_t ExecutableImage::extent() const {
  std::uint64_t top = 0;
  for (const auto& s : segments)
    top = std::max<std::uint64_t>(top, std::uint64_t{s.header.vaddr} + s.header.memsz);
  return top;
}

ExecutableImage validate_image(ByteView bytes, std::uint64_t limit) {
  ExecutableImage image;
  std::vector<SegmentHeader> headers;
  try {
    ByteReader r(bytes);
    if (r.u32() != kImageMagic) throw ImageError(ImageErrorKind::kBadMagic, "not a VXE image");
    image.version = r.u16();
    if (image.version != kImageVersion)
      throw ImageError(ImageErrorKind::kMalformed, "unsupported version " + std::to_string(image.version));
    r.u16();
    image.entry = r.u32();
    const std::uint16_t nsegs = r.u16();
    r.u16();
    if (nsegs == 0) throw ImageError(ImageErrorKind::kMalformed, "no segments");
    for (std::uint16_t i = 0; i < nsegs; ++i) {
      SegmentHeader h;
      h.vaddr = r.u32();
      h.filesz = r.u32();
      h.memsz = r.u32();
      h.perm = r.u8();
      r.skip(3);
      h.fileoff = r.u32();
      headers.push_back(h);
    }
  } catch (const TruncatedInput& e) {
    throw ImageError(ImageErrorKind::kMalformed, "header truncated at offset " + std::to_string(e.offset()));
  }

  for (std::size_t i = 0; i < headers.size(); ++i) {
    const SegmentHeader& h = headers[i];
    const std::string where = "segment " + std::to_string(i);
    if (h.perm & ~(kPermR | kPermW | kPermX))
      throw ImageError(ImageErrorKind::kMalformed, where + ": unknown permission bits");
    if ((h.perm & kPermW) && (h.perm & kPermX))
      throw ImageError(ImageErrorKind::kWxViolation, where + " is both writable and executable");
    if (h.vaddr % kPageSize != 0 || h.memsz % kPageSize != 0)
      throw ImageError(ImageErrorKind::kMalformed, where + ": vaddr/memsz not page aligned");
    if (h.memsz == 0 || h.memsz < h.filesz)
      throw ImageError(ImageErrorKind::kMalformed, where + ": memsz smaller than filesz");
    if (std::uint64_t{h.vaddr} + h.memsz > limit)
      throw ImageError(ImageErrorKind::kLimitExceeded, where + " ends at " + hex(std::uint64_t{h.vaddr} + h.memsz));
    if (std::uint64_t{h.fileoff} + h.filesz > bytes.size())
      throw ImageError(ImageErrorKind::kMalformed, where + ": payload outside image");
    for (std::size_t j = 0; j < i; ++j) {
      const SegmentHeader& o = headers[j];
      const bool disjoint = std::uint64_t{h.vaddr} + h.memsz <= o.vaddr ||
                            std::uint64_t{o.vaddr} + o.memsz <= h.vaddr;
      if (!disjoint)
        throw ImageError(ImageErrorKind::kOverlappingSegments,
                         where + " overlaps segment " + std::to_string(j));
    }
  }

  bool entry_ok = false;
  for (const SegmentHeader& h : headers) {
    if ((h.perm & kPermX) && image.entry >= h.vaddr &&
        std::uint64_t{image.entry} < std::uint64_t{h.vaddr} + h.memsz)
      entry_ok = true;
  }
  if (!entry_ok)
    throw ImageError(ImageErrorKind::kEntryNotExecutable, "entry " + hex(image.entry));

  for (const SegmentHeader& h : headers) {
    Segment s;
    s.header = h;
    s.data.assign(bytes.begin() + h.fileoff, bytes.begin() + h.fileoff + h.filesz);
    image.segments.push_back(std::move(s));
  }
  return image;
}

Bytes serialize_image(const ExecutableImage& image) {
  Bytes out;
  ByteWriter w(out);
  w.u32(kImageMagic);
  w.u16(image.version);
  w.u16(0);
  w.u32(image.entry);
  w.u16(static_cast<std::uint16_t>(image.segments.size()));
  w.u16(0);
  std::uint32_t off = static_cast<std::uint32_t>(kHeaderSize + kSegmentHeaderSize * image.segments.size());
  for (const auto& s : image.segments) {
    w.u32(s.header.vaddr);
    w.u32(static_cast<std::uint32_t>(s.data.size()));
    w.u32(s.header.memsz);
    w.u8(s.header.perm);
    w.zeros(3);
    w.u32(off);
    off += static_cast<std::uint32_t>(s.data.size());
  }
  for (const auto& s : image.segments) w.bytes(s.data);
  return out;
}

}  // namespace vxa::isa
