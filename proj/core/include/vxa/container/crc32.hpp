#pragma once

#include <cstdint>

#include "vxa/bytes.hpp"

namespace vxa::container {

// CRC-32/IEEE (reflected polynomial 0xEDB88320, init and final xor
// 0xFFFFFFFF).
std::uint32_t crc32(ByteView data);

// Incremental form: feed chunks through update(), read value() at the end.
class Crc32 {
 public:
  void update(ByteView data);
  std::uint32_t value() const { return ~state_; }

 private:
  std::uint32_t state_ = 0xFFFFFFFFu;
};

}  // namespace vxa::container
