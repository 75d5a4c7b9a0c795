#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vxa {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return Bytes(v.begin(), v.end());
}

inline std::string to_string(ByteView b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

// Thrown by ByteReader when a read would run past the end of its buffer.
class TruncatedInput : public std::runtime_error {
 public:
  TruncatedInput(std::size_t offset, std::size_t wanted)
      : std::runtime_error("truncated input at offset " +
                           std::to_string(offset)),
        offset_(offset),
        wanted_(wanted) {}

  std::size_t offset() const { return offset_; }
  std::size_t wanted() const { return wanted_; }

 private:
  std::size_t offset_;
  std::size_t wanted_;
};

// Little-endian appender.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void bytes(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }

  std::size_t size() const { return out_.size(); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes& out_;
};

// Bounds-checked little-endian cursor over an immutable buffer. Every read
// either succeeds entirely or throws TruncatedInput without advancing.
class ByteReader {
 public:
  explicit ByteReader(ByteView data, std::size_t pos = 0)
      : data_(data), pos_(pos) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }

  ByteView take(std::uint64_t n) {
    require(n);
    ByteView v = data_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  void skip(std::uint64_t n) { take(n); }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const {
    return pos_ <= data_.size() ? data_.size() - pos_ : 0;
  }
  bool at_end() const { return remaining() == 0; }

 private:
  void require(std::uint64_t n) const {
    if (pos_ > data_.size() || n > data_.size() - pos_)
      throw TruncatedInput(pos_, static_cast<std::size_t>(n));
  }

  std::uint64_t get(int n) {
    require(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  ByteView data_;
  std::size_t pos_;
};

inline std::uint32_t load_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_le32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}

}  // namespace vxa
