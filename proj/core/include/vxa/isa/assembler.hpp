#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vxa/isa/image.hpp"

namespace vxa::isa {

inline constexpr std::uint32_t kTextBase = 0x00001000;
// Sections must end below the default stack and its guard page.
inline constexpr std::uint32_t kAssemblerTop = 0x0FFEF000;

class AsmError : public std::runtime_error {
 public:
  AsmError(int line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

struct AssemblyUnit {
  ExecutableImage image;
  std::map<std::string, std::uint32_t, std::less<>> symbols;  // label -> vaddr
  std::uint32_t text_size = 0;
  std::uint32_t data_size = 0;
};

// Two-pass assembler for the dialect described in docs/isa.md. Output is a
// pure function of the source text.
AssemblyUnit assemble_unit(std::string_view source);

inline ExecutableImage assemble(std::string_view source) {
  return assemble_unit(source).image;
}

}  // namespace vxa::isa
