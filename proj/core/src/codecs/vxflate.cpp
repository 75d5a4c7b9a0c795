#include "vxa/codecs/vxflate.hpp"

#include <algorithm>
#include <vector>

namespace vxa::codecs {
namespace {

constexpr std::uint32_t kHashBits = 15;
constexpr std::uint32_t kNoPos = 0xFFFFFFFFu;

std::uint32_t hash3(const std::uint8_t* p) {
  std::uint32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
  return (v * 2654435761u) >> (32 - kHashBits);
}

class TokenSink {
 public:
  explicit TokenSink(Bytes& out) : out_(out) {}

  void literal(std::uint8_t b) {
    open_slot();
    out_.push_back(b);
  }

  void match(std::uint32_t offset, std::uint32_t length) {
    open_slot();
    out_[flag_pos_] |= static_cast<std::uint8_t>(1u << (count_ - 1));
    std::uint32_t v = (offset - 1) | ((length - kVxflateMinMatch) << 12);
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }

 private:
  void open_slot() {
    if (count_ == 8 || !started_) {
      flag_pos_ = out_.size();
      out_.push_back(0);
      count_ = 0;
      started_ = true;
    }
    ++count_;
  }

  Bytes& out_;
  std::size_t flag_pos_ = 0;
  int count_ = 0;
  bool started_ = false;
};

}  // namespace

Bytes encode_vxflate(ByteView input) {
  Bytes out;
  out.reserve(input.size() / 2 + 16);
  TokenSink sink(out);

  const std::size_t n = input.size();
  const std::uint8_t* data = input.data();
  std::vector<std::uint32_t> head(1u << kHashBits, kNoPos);
  std::vector<std::uint32_t> prev(n, kNoPos);

  auto insert = [&](std::size_t pos) {
    if (pos + kVxflateMinMatch > n) return;
    std::uint32_t h = hash3(data + pos);
    prev[pos] = head[h];
    head[h] = static_cast<std::uint32_t>(pos);
  };

  std::size_t pos = 0;
  while (pos < n) {
    std::uint32_t best_len = 0;
    std::uint32_t best_off = 0;
    if (pos + kVxflateMinMatch <= n) {
      const std::uint32_t max_len =
          static_cast<std::uint32_t>(std::min<std::size_t>(kVxflateMaxMatch, n - pos));
      // Chain is walked most-recent first, so only a strictly longer match
      // may replace the current best.
      for (std::uint32_t cand = head[hash3(data + pos)]; cand != kNoPos;
           cand = prev[cand]) {
        const std::size_t off = pos - cand;
        if (off > kVxflateWindow) break;
        std::uint32_t len = 0;
        while (len < max_len && data[cand + len] == data[pos + len]) ++len;
        if (len > best_len) {
          best_len = len;
          best_off = static_cast<std::uint32_t>(off);
          if (len == max_len) break;
        }
      }
    }
    if (best_len >= kVxflateMinMatch) {
      sink.match(best_off, best_len);
      for (std::uint32_t i = 0; i < best_len; ++i) insert(pos + i);
      pos += best_len;
    } else {
      sink.literal(data[pos]);
      insert(pos);
      ++pos;
    }
  }
  return out;
}

Bytes decode_vxflate_host(ByteView stream, std::uint64_t expected_size) {
  Bytes out;
  // Matches expand at most 18 bytes per 2.125 input bytes.
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(expected_size, stream.size() * 9 + 16)));
  std::size_t in = 0;
  while (out.size() < expected_size) {
    if (in >= stream.size()) throw CorruptStream("stream ends before expected size");
    const std::uint8_t flags = stream[in++];
    for (int bit = 0; bit < 8 && out.size() < expected_size; ++bit) {
      if ((flags >> bit) & 1) {
        if (stream.size() - in < 2) throw CorruptStream("truncated match");
        const std::uint32_t v = stream[in] | (stream[in + 1] << 8);
        in += 2;
        const std::uint32_t offset = (v & 0x0FFF) + 1;
        const std::uint32_t length = (v >> 12) + kVxflateMinMatch;
        if (offset > out.size()) throw CorruptStream("match offset before start of output");
        if (out.size() + length > expected_size) throw CorruptStream("match overshoots expected size");
        std::size_t from = out.size() - offset;
        for (std::uint32_t i = 0; i < length; ++i) out.push_back(out[from + i]);
      } else {
        if (in >= stream.size()) throw CorruptStream("truncated literal");
        out.push_back(stream[in++]);
      }
    }
  }
  return out;
}

}  // namespace vxa::codecs
