#pragma once

#include <cmath>
#include <random>
#include <string>

#include "vxa/bytes.hpp"

namespace bench {

inline vxa::Bytes repetitive(std::size_t n) {
  const std::string line = "The quick brown fox jumps over the lazy dog. 0123456789\n";
  vxa::Bytes b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(line[i % line.size()]);
  return b;
}

inline vxa::Bytes text(std::size_t n, unsigned seed = 1) {
  static const char* words[] = {"archive", "decoder", "page", "the", "of", "stream", "a", "codec"};
  std::mt19937 rng(seed);
  vxa::Bytes b;
  while (b.size() < n) {
    for (const char* p = words[rng() % 8]; *p; ++p) b.push_back(static_cast<std::uint8_t>(*p));
    b.push_back(' ');
  }
  b.resize(n);
  return b;
}

inline vxa::Bytes sine_wav(std::size_t samples) {
  vxa::Bytes w;
  vxa::ByteWriter o(w);
  const auto ds = static_cast<std::uint32_t>(samples * 2);
  o.bytes(vxa::as_bytes("RIFF"));
  o.u32(36 + ds);
  o.bytes(vxa::as_bytes("WAVEfmt "));
  o.u32(16);
  o.u16(1);
  o.u16(1);
  o.u32(44100);
  o.u32(88200);
  o.u16(2);
  o.u16(16);
  o.bytes(vxa::as_bytes("data"));
  o.u32(ds);
  for (std::size_t i = 0; i < samples; ++i)
    o.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(12000 * std::sin(2 * M_PI * 440.0 * i / 44100))));
  return w;
}

}  // namespace bench
