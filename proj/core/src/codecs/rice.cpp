#include "vxa/codecs/rice.hpp"

#include "vxa/codecs/vxflate.hpp"

namespace vxa::codecs {

void BitWriter::put_bit(bool bit) {
  if (bits_ % 8 == 0) out_.push_back(0);
  if (bit) out_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

void BitWriter::put_bits(std::uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put_bit((value >> i) & 1);
}

void BitWriter::align() { bits_ = (bits_ + 7) / 8 * 8; }

Bytes BitWriter::take() {
  bits_ = 0;
  return std::move(out_);
}

bool BitReader::bit() {
  if (pos_ >= static_cast<std::uint64_t>(data_.size()) * 8)
    throw CorruptStream("bitstream ends early");
  const bool b = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1;
  ++pos_;
  return b;
}

std::uint32_t BitReader::bits(int count) {
  std::uint32_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | (bit() ? 1u : 0u);
  return v;
}

std::size_t BitReader::align() {
  pos_ = (pos_ + 7) / 8 * 8;
  return static_cast<std::size_t>(pos_ / 8);
}

void rice_encode(std::span<const std::uint32_t> values, int k, BitWriter& out) {
  for (std::uint32_t z : values) {
    for (std::uint32_t q = z >> k; q > 0; --q) out.put_bit(true);
    out.put_bit(false);
    out.put_bits(z, k);
  }
}

Bytes rice_encode(std::span<const std::uint32_t> values, int k) {
  BitWriter w;
  rice_encode(values, k, w);
  return w.take();
}

std::vector<std::uint32_t> rice_decode(BitReader& in, int k, std::size_t n) {
  std::vector<std::uint32_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t q = 0;
    while (in.bit()) {
      if (++q > kRiceMaxQuotient) throw CorruptStream("rice quotient too long");
    }
    out.push_back((q << k) | in.bits(k));
  }
  return out;
}

std::vector<std::uint32_t> rice_decode(ByteView bits, int k, std::size_t n) {
  BitReader r(bits);
  return rice_decode(r, k, n);
}

}  // namespace vxa::codecs
