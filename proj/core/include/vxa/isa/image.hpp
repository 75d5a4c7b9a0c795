#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vxa/bytes.hpp"

namespace vxa::isa {

inline constexpr std::uint32_t kImageMagic = 0x31415856;  // "VXA1"
inline constexpr std::uint16_t kImageVersion = 1;
inline constexpr std::uint64_t kMaxGuestMemory = 1ull << 30;

enum Perm : std::uint8_t {
  kPermNone = 0,
  kPermR = 1,
  kPermW = 2,
  kPermX = 4,
};

struct SegmentHeader {
  std::uint32_t vaddr = 0;
  std::uint32_t filesz = 0;
  std::uint32_t memsz = 0;
  std::uint8_t perm = 0;
  std::uint32_t fileoff = 0;

  friend bool operator==(const SegmentHeader&, const SegmentHeader&) = default;
};

struct Segment {
  SegmentHeader header;
  Bytes data;  // exactly header.filesz bytes

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ExecutableImage {
  std::uint16_t version = kImageVersion;
  std::uint32_t entry = 0;
  std::vector<Segment> segments;

  // Highest vaddr + memsz over all segments.
  std::uint64_t extent() const;

  friend bool operator==(const ExecutableImage&, const ExecutableImage&) = default;
};

enum class ImageErrorKind {
  kBadMagic,
  kMalformed,
  kOverlappingSegments,
  kWxViolation,
  kEntryNotExecutable,
  kLimitExceeded,
};

const char* to_string(ImageErrorKind kind);

class ImageError : public std::runtime_error {
 public:
  ImageError(ImageErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind) {}

  ImageErrorKind kind() const { return kind_; }

 private:
  ImageErrorKind kind_;
};

// Parses and checks a VXE image: magic and version, header/payload bounds,
// page alignment, memsz >= filesz, W^X, pairwise disjoint segments, every
// segment below `limit`, entry inside an executable segment.
ExecutableImage validate_image(ByteView bytes, std::uint64_t limit = kMaxGuestMemory);

// Serialises with payloads packed after the header table in segment order;
// fileoff fields are recomputed.
Bytes serialize_image(const ExecutableImage& image);

}  // namespace vxa::isa
