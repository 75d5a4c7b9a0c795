#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vxa/bytes.hpp"

namespace vxa::isa {

inline constexpr int kNumRegs = 8;
inline constexpr int kStackReg = 7;
inline constexpr std::uint32_t kPageSize = 4096;

enum class Opcode : std::uint8_t {
  kMovi = 0x01,
  kMov = 0x02,
  kAdd = 0x10,
  kSub = 0x11,
  kAnd = 0x12,
  kOr = 0x13,
  kXor = 0x14,
  kShl = 0x15,
  kShr = 0x16,
  kSar = 0x17,
  kMul = 0x18,
  kDivu = 0x19,
  kRemu = 0x1A,
  kAddi = 0x1B,
  kLdw = 0x20,
  kLdb = 0x21,
  kStw = 0x22,
  kStb = 0x23,
  kJmp = 0x30,
  kJmpr = 0x31,
  kBeq = 0x32,
  kBne = 0x33,
  kBltu = 0x34,
  kBgeu = 0x35,
  kBlt = 0x36,
  kBge = 0x37,
  kCall = 0x40,
  kRet = 0x41,
  kSys = 0x50,
};

enum class Format : std::uint8_t {
  kInvalid,
  kRegImm,     // op, rd<<4, imm32          (6 bytes)
  kRegReg,     // op, rd<<4 | rs            (2 bytes)
  kMem,        // op, rd<<4 | rs, disp16    (4 bytes)
  kImm,        // op, imm32                 (5 bytes)
  kReg,        // op, rs                    (2 bytes)
  kBranch,     // op, ra<<4 | rb, imm32     (6 bytes)
  kNone,       // op, 0                     (2 bytes)
  kSys,        // op, imm8                  (2 bytes)
};

Format format_of(std::uint8_t opcode);
// Encoded length for a valid opcode, 0 for an unassigned one.
std::uint32_t length_of(std::uint8_t opcode);
std::string_view mnemonic(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view name);

// One decoded instruction. Fields not used by the opcode's format are zero.
struct Instruction {
  Opcode opcode = Opcode::kSys;
  std::uint8_t rd = 0;
  std::uint8_t rs = 0;
  std::uint8_t ra = 0;
  std::uint8_t rb = 0;
  std::uint32_t imm = 0;
  std::int16_t disp = 0;
  std::uint8_t sysno = 0;
  std::uint8_t length = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

std::string to_string(const Instruction& insn);

enum class DecodeStatus : std::uint8_t {
  kOk,
  kInvalidInstruction,  // unassigned opcode, bad register nibble, nonzero reserved bits
  kTruncated,           // the encoding runs past the end of the supplied bytes
};

struct Decoded {
  DecodeStatus status = DecodeStatus::kInvalidInstruction;
  Instruction insn;
};

// Decodes the instruction starting at code[offset]. Never reads outside
// `code`; an encoding that would extend past its end reports kTruncated.
Decoded decode_instruction(ByteView code, std::size_t offset = 0);

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws EncodeError for register indices above 7.
Bytes encode_instruction(const Instruction& insn);
void encode_instruction(const Instruction& insn, Bytes& out);

// Convenience constructors used by tests and the assembler.
Instruction make_reg_imm(Opcode op, int rd, std::uint32_t imm);
Instruction make_reg_reg(Opcode op, int rd, int rs);
Instruction make_mem(Opcode op, int rd, int rs, std::int32_t disp);
Instruction make_imm(Opcode op, std::uint32_t target);
Instruction make_reg(Opcode op, int rs);
Instruction make_branch(Opcode op, int ra, int rb, std::uint32_t target);
Instruction make_ret();
Instruction make_sys(std::uint8_t sysno);

}  // namespace vxa::isa
