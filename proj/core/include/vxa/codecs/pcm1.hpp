#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "vxa/bytes.hpp"

namespace vxa::codecs {

inline constexpr std::uint32_t kPcm1BlockSamples = 4096;
inline constexpr std::size_t kWavHeaderSize = 44;

class NotRecognized : public std::runtime_error {
 public:
  explicit NotRecognized(const std::string& what) : std::runtime_error(what) {}
};

struct WavInfo {
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint32_t data_size = 0;
};

// Canonical 44-byte header: RIFF/WAVE, 16-byte fmt chunk, PCM, 16-bit,
// one or two channels, consistent rates, data chunk running to the end of
// the file and holding whole frames. `total_size` is the full file length.
std::optional<WavInfo> parse_canonical_wav(ByteView prefix, std::uint64_t total_size);

// Layout: "VXP1", the 44 header bytes, then for each block of up to 4096
// frames and each channel in turn: order u8, k u8, sample_count u32,
// `order` raw int16 warm-up samples, Rice-coded residuals padded to a byte.
// Throws NotRecognized for non-canonical input.
Bytes encode_pcm1(ByteView wav);
Bytes decode_pcm1_host(ByteView stream);

// Exact bit cost of one channel block at the given order and k, or nullopt
// if some quotient would exceed the decoder limit.
std::optional<std::uint64_t> pcm1_block_bits(const std::int16_t* samples, std::uint32_t count,
                                             int order, int k);

struct Pcm1BlockChoice {
  int order = 0;
  int k = 0;
  std::uint64_t bits = 0;
};
Pcm1BlockChoice pcm1_choose(const std::int16_t* samples, std::uint32_t count);

}  // namespace vxa::codecs
