#include "vxa/container/crc32.hpp"

#include <array>

namespace vxa::container {
namespace {

constexpr std::array<std::uint32_t, 256> make_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

constexpr auto kTable = make_table();

}  // namespace

void Crc32::update(ByteView data) {
  std::uint32_t c = state_;
  for (std::uint8_t b : data) c = kTable[(c ^ b) & 0xFF] ^ (c >> 8);
  state_ = c;
}

std::uint32_t crc32(ByteView data) {
  Crc32 c;
  c.update(data);
  return c.value();
}

}  // namespace vxa::container
