#include "vxa/codecs/pcm1.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <vector>

#include "vxa/codecs/rice.hpp"
#include "vxa/codecs/vxflate.hpp"

namespace vxa::codecs {
namespace {

constexpr int kMaxOrder = 2;

std::int32_t predict(const std::int32_t* s, std::size_t n, int order) {
  switch (order) {
    case 0: return 0;
    case 1: return s[n - 1];
    default: return static_cast<std::int32_t>(2u * static_cast<std::uint32_t>(s[n - 1]) -
                                              static_cast<std::uint32_t>(s[n - 2]));
  }
}

void residuals(const std::int16_t* samples, std::uint32_t count, int order,
               std::vector<std::uint32_t>& z) {
  z.clear();
  std::vector<std::int32_t> s(samples, samples + count);
  for (std::uint32_t n = order; n < count; ++n)
    z.push_back(zigzag(s[n] - predict(s.data(), n, order)));
}

std::optional<std::uint64_t> cost(const std::vector<std::uint32_t>& z, int order, int k) {
  std::uint64_t bits = 16ull * order;
  for (std::uint32_t v : z) {
    if ((v >> k) > kRiceMaxQuotient) return std::nullopt;
    bits += rice_bits(v, k);
  }
  return bits;
}

}  // namespace

std::optional<WavInfo> parse_canonical_wav(ByteView p, std::uint64_t total_size) {
  if (p.size() < kWavHeaderSize || total_size < kWavHeaderSize) return std::nullopt;
  auto tag = [&](std::size_t off, const char* t) { return std::memcmp(p.data() + off, t, 4) == 0; };
  auto u16_at = [&](std::size_t off) { return static_cast<std::uint16_t>(p[off] | p[off + 1] << 8); };
  auto u32_at = [&](std::size_t off) { return load_le32(p.data() + off); };
  if (!tag(0, "RIFF") || !tag(8, "WAVE") || !tag(12, "fmt ") || !tag(36, "data")) return std::nullopt;
  if (u32_at(4) != total_size - 8 || u32_at(16) != 16 || u16_at(20) != 1) return std::nullopt;
  WavInfo info;
  info.channels = u16_at(22);
  info.sample_rate = u32_at(24);
  info.data_size = u32_at(40);
  if (info.channels != 1 && info.channels != 2) return std::nullopt;
  if (u16_at(34) != 16 || u16_at(32) != info.channels * 2) return std::nullopt;
  if (u32_at(28) != static_cast<std::uint64_t>(info.sample_rate) * info.channels * 2) return std::nullopt;
  if (info.data_size != total_size - kWavHeaderSize) return std::nullopt;
  if (info.data_size % (2u * info.channels) != 0) return std::nullopt;
  return info;
}

std::optional<std::uint64_t> pcm1_block_bits(const std::int16_t* samples, std::uint32_t count,
                                             int order, int k) {
  if (order < 0 || order > kMaxOrder || k < 0 || k > kRiceMaxK || count < static_cast<std::uint32_t>(order))
    return std::nullopt;
  std::vector<std::uint32_t> z;
  residuals(samples, count, order, z);
  return cost(z, order, k);
}

Pcm1BlockChoice pcm1_choose(const std::int16_t* samples, std::uint32_t count) {
  Pcm1BlockChoice best{0, 0, UINT64_MAX};
  std::vector<std::uint32_t> z;
  for (int order = 0; order <= kMaxOrder; ++order) {
    if (count < static_cast<std::uint32_t>(order)) break;
    residuals(samples, count, order, z);
    for (int k = 0; k <= kRiceMaxK; ++k) {
      auto bits = cost(z, order, k);
      if (bits && *bits < best.bits) best = {order, k, *bits};
    }
  }
  return best;
}

Bytes encode_pcm1(ByteView wav) {
  auto info = parse_canonical_wav(wav, wav.size());
  if (!info) throw NotRecognized("pcm1: not a canonical 16-bit PCM WAV file");
  const std::uint32_t channels = info->channels;
  const std::uint64_t frames = info->data_size / (2u * channels);

  std::vector<std::vector<std::int16_t>> chan(channels, std::vector<std::int16_t>(frames));
  const std::uint8_t* d = wav.data() + kWavHeaderSize;
  for (std::uint64_t f = 0; f < frames; ++f)
    for (std::uint32_t c = 0; c < channels; ++c) {
      const std::uint8_t* s = d + (f * channels + c) * 2;
      chan[c][f] = static_cast<std::int16_t>(s[0] | s[1] << 8);
    }

  Bytes out;
  out.reserve(4 + wav.size() / 2);
  ByteWriter w(out);
  w.bytes(as_bytes("VXP1"));
  w.bytes(wav.first(kWavHeaderSize));
  std::vector<std::uint32_t> z;
  for (std::uint64_t start = 0; start < frames; start += kPcm1BlockSamples) {
    const auto count = static_cast<std::uint32_t>(std::min<std::uint64_t>(kPcm1BlockSamples, frames - start));
    for (std::uint32_t c = 0; c < channels; ++c) {
      const std::int16_t* s = chan[c].data() + start;
      const Pcm1BlockChoice choice = pcm1_choose(s, count);
      w.u8(static_cast<std::uint8_t>(choice.order));
      w.u8(static_cast<std::uint8_t>(choice.k));
      w.u32(count);
      for (int i = 0; i < choice.order; ++i) w.u16(static_cast<std::uint16_t>(s[i]));
      residuals(s, count, choice.order, z);
      w.bytes(rice_encode(z, choice.k));
    }
  }
  return out;
}

Bytes decode_pcm1_host(ByteView stream) {
  if (stream.size() < 4 + kWavHeaderSize || std::memcmp(stream.data(), "VXP1", 4) != 0)
    throw CorruptStream("pcm1: bad magic");
  ByteView header = stream.subspan(4, kWavHeaderSize);
  const std::uint16_t channels = static_cast<std::uint16_t>(header[22] | header[23] << 8);
  if (channels != 1 && channels != 2) throw CorruptStream("pcm1: bad channel count");

  Bytes out(header.begin(), header.end());
  std::size_t pos = 4 + kWavHeaderSize;
  std::array<std::vector<std::int32_t>, 2> block;
  while (pos < stream.size()) {
    std::uint32_t count0 = 0;
    for (std::uint32_t c = 0; c < channels; ++c) {
      if (stream.size() - pos < 6) throw CorruptStream("pcm1: truncated block header");
      ByteReader r(stream, pos);
      const int order = r.u8();
      const int k = r.u8();
      const std::uint32_t count = r.u32();
      if (order > kMaxOrder || k > kRiceMaxK || count == 0 || count > kPcm1BlockSamples ||
          count < static_cast<std::uint32_t>(order))
        throw CorruptStream("pcm1: bad block header");
      if (c == 0) count0 = count;
      else if (count != count0) throw CorruptStream("pcm1: channel block sizes differ");
      auto& s = block[c];
      s.assign(count, 0);
      try {
        for (int i = 0; i < order; ++i) s[i] = static_cast<std::int16_t>(r.u16());
      } catch (const TruncatedInput&) {
        throw CorruptStream("pcm1: truncated warm-up");
      }
      BitReader bits(stream, r.pos());
      const auto z = rice_decode(bits, k, count - order);
      for (std::uint32_t n = order; n < count; ++n) {
        const std::uint32_t v = static_cast<std::uint32_t>(predict(s.data(), n, order)) +
                                static_cast<std::uint32_t>(unzigzag(z[n - order]));
        s[n] = static_cast<std::int16_t>(v);
      }
      pos = bits.align();
    }
    for (std::uint32_t n = 0; n < count0; ++n)
      for (std::uint32_t c = 0; c < channels; ++c) {
        const auto v = static_cast<std::uint16_t>(block[c][n]);
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
      }
  }
  return out;
}

}  // namespace vxa::codecs
