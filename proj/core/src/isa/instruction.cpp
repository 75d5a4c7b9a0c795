#include "vxa/isa/instruction.hpp"

#include <array>
#include <limits>

namespace vxa::isa {
namespace {

struct OpInfo {
  Format format;
  std::string_view name;
};

constexpr std::array<OpInfo, 256> make_table() {
  std::array<OpInfo, 256> t{};
  for (auto& e : t) e = {Format::kInvalid, ""};
  t[0x01] = {Format::kRegImm, "MOVI"};
  t[0x02] = {Format::kRegReg, "MOV"};
  t[0x10] = {Format::kRegReg, "ADD"};
  t[0x11] = {Format::kRegReg, "SUB"};
  t[0x12] = {Format::kRegReg, "AND"};
  t[0x13] = {Format::kRegReg, "OR"};
  t[0x14] = {Format::kRegReg, "XOR"};
  t[0x15] = {Format::kRegReg, "SHL"};
  t[0x16] = {Format::kRegReg, "SHR"};
  t[0x17] = {Format::kRegReg, "SAR"};
  t[0x18] = {Format::kRegReg, "MUL"};
  t[0x19] = {Format::kRegReg, "DIVU"};
  t[0x1A] = {Format::kRegReg, "REMU"};
  t[0x1B] = {Format::kRegImm, "ADDI"};
  t[0x20] = {Format::kMem, "LDW"};
  t[0x21] = {Format::kMem, "LDB"};
  t[0x22] = {Format::kMem, "STW"};
  t[0x23] = {Format::kMem, "STB"};
  t[0x30] = {Format::kImm, "JMP"};
  t[0x31] = {Format::kReg, "JMPR"};
  t[0x32] = {Format::kBranch, "BEQ"};
  t[0x33] = {Format::kBranch, "BNE"};
  t[0x34] = {Format::kBranch, "BLTU"};
  t[0x35] = {Format::kBranch, "BGEU"};
  t[0x36] = {Format::kBranch, "BLT"};
  t[0x37] = {Format::kBranch, "BGE"};
  t[0x40] = {Format::kImm, "CALL"};
  t[0x41] = {Format::kNone, "RET"};
  t[0x50] = {Format::kSys, "SYS"};
  return t;
}

constexpr auto kOps = make_table();

constexpr std::uint32_t format_length(Format f) {
  switch (f) {
    case Format::kRegImm: return 6;
    case Format::kRegReg: return 2;
    case Format::kMem: return 4;
    case Format::kImm: return 5;
    case Format::kReg: return 2;
    case Format::kBranch: return 6;
    case Format::kNone: return 2;
    case Format::kSys: return 2;
    case Format::kInvalid: return 0;
  }
  return 0;
}

std::uint32_t imm32_at(const std::uint8_t* p) { return load_le32(p); }

void check_reg(int r, const char* what) {
  if (r < 0 || r >= kNumRegs)
    throw EncodeError(std::string("register index out of range for ") + what);
}

void push_imm32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

Format format_of(std::uint8_t opcode) { return kOps[opcode].format; }

std::uint32_t length_of(std::uint8_t opcode) {
  return format_length(kOps[opcode].format);
}

std::string_view mnemonic(Opcode op) {
  return kOps[static_cast<std::uint8_t>(op)].name;
}

std::optional<Opcode> opcode_from_mnemonic(std::string_view name) {
  for (int i = 0; i < 256; ++i) {
    if (kOps[i].format != Format::kInvalid && kOps[i].name == name)
      return static_cast<Opcode>(i);
  }
  return std::nullopt;
}

Decoded decode_instruction(ByteView code, std::size_t offset) {
  Decoded d;
  if (offset >= code.size()) {
    d.status = DecodeStatus::kTruncated;
    return d;
  }
  const std::uint8_t op = code[offset];
  const Format fmt = kOps[op].format;
  if (fmt == Format::kInvalid) return d;
  const std::uint32_t len = format_length(fmt);
  if (code.size() - offset < len) {
    d.status = DecodeStatus::kTruncated;
    return d;
  }
  const std::uint8_t* p = code.data() + offset;
  Instruction& i = d.insn;
  i.opcode = static_cast<Opcode>(op);
  i.length = static_cast<std::uint8_t>(len);
  const std::uint8_t hi = p[1] >> 4;
  const std::uint8_t lo = p[1] & 0x0F;
  switch (fmt) {
    case Format::kRegImm:
      if (hi >= kNumRegs || lo != 0) return d;
      i.rd = hi;
      i.imm = imm32_at(p + 2);
      break;
    case Format::kRegReg:
      if (hi >= kNumRegs || lo >= kNumRegs) return d;
      i.rd = hi;
      i.rs = lo;
      break;
    case Format::kMem:
      if (hi >= kNumRegs || lo >= kNumRegs) return d;
      i.rd = hi;
      i.rs = lo;
      i.disp = static_cast<std::int16_t>(p[2] | (p[3] << 8));
      break;
    case Format::kImm:
      i.imm = imm32_at(p + 1);
      break;
    case Format::kReg:
      if (hi != 0 || lo >= kNumRegs) return d;
      i.rs = lo;
      break;
    case Format::kBranch:
      if (hi >= kNumRegs || lo >= kNumRegs) return d;
      i.ra = hi;
      i.rb = lo;
      i.imm = imm32_at(p + 2);
      break;
    case Format::kNone:
      if (p[1] != 0) return d;
      break;
    case Format::kSys:
      i.sysno = p[1];
      break;
    case Format::kInvalid:
      return d;
  }
  d.status = DecodeStatus::kOk;
  return d;
}

void encode_instruction(const Instruction& i, Bytes& out) {
  const auto op = static_cast<std::uint8_t>(i.opcode);
  const Format fmt = kOps[op].format;
  switch (fmt) {
    case Format::kRegImm:
      check_reg(i.rd, "rd");
      out.push_back(op);
      out.push_back(static_cast<std::uint8_t>(i.rd << 4));
      push_imm32(out, i.imm);
      break;
    case Format::kRegReg:
      check_reg(i.rd, "rd");
      check_reg(i.rs, "rs");
      out.push_back(op);
      out.push_back(static_cast<std::uint8_t>(i.rd << 4 | i.rs));
      break;
    case Format::kMem:
      check_reg(i.rd, "rd");
      check_reg(i.rs, "rs");
      out.push_back(op);
      out.push_back(static_cast<std::uint8_t>(i.rd << 4 | i.rs));
      out.push_back(static_cast<std::uint8_t>(i.disp));
      out.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(i.disp) >> 8));
      break;
    case Format::kImm:
      out.push_back(op);
      push_imm32(out, i.imm);
      break;
    case Format::kReg:
      check_reg(i.rs, "rs");
      out.push_back(op);
      out.push_back(i.rs);
      break;
    case Format::kBranch:
      check_reg(i.ra, "ra");
      check_reg(i.rb, "rb");
      out.push_back(op);
      out.push_back(static_cast<std::uint8_t>(i.ra << 4 | i.rb));
      push_imm32(out, i.imm);
      break;
    case Format::kNone:
      out.push_back(op);
      out.push_back(0);
      break;
    case Format::kSys:
      out.push_back(op);
      out.push_back(i.sysno);
      break;
    case Format::kInvalid:
      throw EncodeError("unassigned opcode");
  }
}

Bytes encode_instruction(const Instruction& insn) {
  Bytes out;
  encode_instruction(insn, out);
  return out;
}

Instruction make_reg_imm(Opcode op, int rd, std::uint32_t imm) {
  check_reg(rd, "rd");
  Instruction i;
  i.opcode = op;
  i.rd = static_cast<std::uint8_t>(rd);
  i.imm = imm;
  i.length = 6;
  return i;
}

Instruction make_reg_reg(Opcode op, int rd, int rs) {
  check_reg(rd, "rd");
  check_reg(rs, "rs");
  Instruction i;
  i.opcode = op;
  i.rd = static_cast<std::uint8_t>(rd);
  i.rs = static_cast<std::uint8_t>(rs);
  i.length = 2;
  return i;
}

Instruction make_mem(Opcode op, int rd, int rs, std::int32_t disp) {
  check_reg(rd, "rd");
  check_reg(rs, "rs");
  if (disp < std::numeric_limits<std::int16_t>::min() ||
      disp > std::numeric_limits<std::int16_t>::max())
    throw EncodeError("displacement does not fit in 16 bits");
  Instruction i;
  i.opcode = op;
  i.rd = static_cast<std::uint8_t>(rd);
  i.rs = static_cast<std::uint8_t>(rs);
  i.disp = static_cast<std::int16_t>(disp);
  i.length = 4;
  return i;
}

Instruction make_imm(Opcode op, std::uint32_t target) {
  Instruction i;
  i.opcode = op;
  i.imm = target;
  i.length = 5;
  return i;
}

Instruction make_reg(Opcode op, int rs) {
  check_reg(rs, "rs");
  Instruction i;
  i.opcode = op;
  i.rs = static_cast<std::uint8_t>(rs);
  i.length = 2;
  return i;
}

Instruction make_branch(Opcode op, int ra, int rb, std::uint32_t target) {
  check_reg(ra, "ra");
  check_reg(rb, "rb");
  Instruction i;
  i.opcode = op;
  i.ra = static_cast<std::uint8_t>(ra);
  i.rb = static_cast<std::uint8_t>(rb);
  i.imm = target;
  i.length = 6;
  return i;
}

Instruction make_ret() {
  Instruction i;
  i.opcode = Opcode::kRet;
  i.length = 2;
  return i;
}

Instruction make_sys(std::uint8_t sysno) {
  Instruction i;
  i.opcode = Opcode::kSys;
  i.sysno = sysno;
  i.length = 2;
  return i;
}

std::string to_string(const Instruction& i) {
  std::string s(mnemonic(i.opcode));
  auto reg = [](int r) { return "r" + std::to_string(r); };
  switch (format_of(static_cast<std::uint8_t>(i.opcode))) {
    case Format::kRegImm:
      s += " " + reg(i.rd) + ", " + std::to_string(static_cast<std::int32_t>(i.imm));
      break;
    case Format::kRegReg:
      s += " " + reg(i.rd) + ", " + reg(i.rs);
      break;
    case Format::kMem:
      s += " " + reg(i.rd) + ", [" + reg(i.rs) + (i.disp < 0 ? "" : "+") +
           std::to_string(i.disp) + "]";
      break;
    case Format::kImm:
      s += " " + std::to_string(i.imm);
      break;
    case Format::kReg:
      s += " " + reg(i.rs);
      break;
    case Format::kBranch:
      s += " " + reg(i.ra) + ", " + reg(i.rb) + ", " + std::to_string(i.imm);
      break;
    case Format::kSys:
      s += " " + std::to_string(i.sysno);
      break;
    case Format::kNone:
    case Format::kInvalid:
      break;
  }
  return s;
}

}  // namespace vxa::isa
