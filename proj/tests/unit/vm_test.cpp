#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "vxa/codecs/bundled.hpp"
#include "vxa/codecs/rle.hpp"
#include "vxa/codecs/vxflate.hpp"
#include "vxa/isa/assembler.hpp"
#include "vxa/isa/instruction.hpp"
#include "vxa/vm/machine.hpp"

using namespace vxa;
using namespace vxa::vm;
using vxtest::run_source;

namespace {

constexpr std::uint64_t kSmall = 1 << 20;

MachineConfig small(bool cache = true) {
  MachineConfig c;
  c.mem_limit = kSmall;
  c.use_cache = cache;
  return c;
}

void expect_trap(const Status& s, TrapKind kind) {
  ASSERT_EQ(s.state, RunState::kTrapped) << describe(s);
  EXPECT_EQ(s.trap.kind, kind) << describe(s);
}

std::string hex(std::uint64_t v) {
  char b[24];
  std::snprintf(b, sizeof b, "0x%llx", static_cast<unsigned long long>(v));
  return b;
}

// Runs in both execution modes and checks they agree before returning the
// cached result.
vxtest::GuestResult run_both(const std::string& src, ByteView input = {}, MachineConfig cfg = small()) {
  cfg.use_cache = true;
  auto a = run_source(src, input, cfg);
  cfg.use_cache = false;
  auto b = run_source(src, input, cfg);
  EXPECT_EQ(a.status, b.status) << describe(a.status) << " vs " << describe(b.status);
  EXPECT_EQ(a.instret, b.instret);
  EXPECT_EQ(a.output, b.output);
  return a;
}

}  // namespace

TEST(Exec, ExitCountsTwoInstructions) {
  auto r = run_both(".entry s\n.text\ns: MOVI r0, 0\nSYS 0\n");
  EXPECT_EQ(r.status.state, RunState::kExited);
  EXPECT_EQ(r.status.exit_code, 0u);
  EXPECT_EQ(r.instret, 2u);
}

TEST(Exec, ExitCodeAndNoResume) {
  const auto img = isa::assemble(".entry s\n.text\ns: MOVI r0, 7\nSYS 0\n");
  Machine m(img, small(), {});
  EXPECT_EQ(m.run().state, RunState::kExited);
  EXPECT_EQ(m.status().exit_code, 7u);
  EXPECT_THROW(m.run(), std::logic_error);
  EXPECT_THROW(m.rebind({}), std::logic_error);
}

TEST(Exec, EntryState) {
  const auto img = isa::assemble(".entry s\n.text\ns: SYS 0\n");
  Machine m(img, small(), {});
  for (int i = 0; i < 7; ++i) EXPECT_EQ(m.regs()[i], 0u);
  EXPECT_EQ(m.regs()[7], kSmall);
  EXPECT_EQ(m.pc(), isa::kTextBase);
  EXPECT_EQ(m.page_perm(isa::kTextBase / 4096), isa::kPermR | isa::kPermX);
  EXPECT_EQ(m.page_perm(0), 0);
  EXPECT_EQ(m.page_perm((kSmall - 4096) / 4096), isa::kPermR | isa::kPermW);
  EXPECT_EQ(m.page_perm((kSmall - kStackSize - 4096) / 4096), 0);  // guard
}

TEST(Exec, TwoCreatesHaveIdenticalState) {
  const auto img = isa::assemble(".entry s\n.text\ns: SYS 0\n.data\nx: .word 1,2,3\n");
  Machine a(img, small(), {});
  Machine b(img, small(), {});
  EXPECT_EQ(a.state_digest(), b.state_digest());
  EXPECT_EQ(a.regs(), b.regs());
  const auto bundled = isa::validate_image(codecs::bundled_decoder("pcm1"));
  Machine c(bundled, {}, {});
  Machine d(bundled, {}, {});
  EXPECT_EQ(c.state_digest(), d.state_digest());
}

TEST(Exec, StoreAboveLimitIsOutOfBounds) {
  auto r = run_both(".entry s\n.text\ns: STW r0, [r7+4]\nSYS 0\n");
  expect_trap(r.status, TrapKind::kOutOfBounds);
  EXPECT_EQ(r.status.trap.vaddr, kSmall + 4);
  EXPECT_EQ(r.status.trap.pc_at_trap, isa::kTextBase);
}

TEST(Exec, StackTopBoundary) {
  auto ok = run_both(".entry s\n.text\ns: LDW r0, [r7-4]\nSYS 0\n");
  EXPECT_EQ(ok.status.state, RunState::kExited);
  auto bad = run_both(".entry s\n.text\ns: LDW r0, [r7-2]\nSYS 0\n");
  expect_trap(bad.status, TrapKind::kOutOfBounds);
  EXPECT_EQ(bad.status.trap.vaddr, kSmall - 2);
}

TEST(Exec, FuelExhaustion) {
  MachineConfig c = small();
  c.fuel = 1000;
  auto r = run_both(".entry s\n.text\ns: JMP s\n", {}, c);
  expect_trap(r.status, TrapKind::kFuelExhausted);
  EXPECT_EQ(r.instret, 1000u);

  c.fuel = 2;
  auto exact = run_both(".entry s\n.text\ns: MOVI r0, 0\nSYS 0\n", {}, c);
  EXPECT_EQ(exact.status.state, RunState::kExited);
  c.fuel = 1;
  auto short_ = run_both(".entry s\n.text\ns: MOVI r0, 0\nSYS 0\n", {}, c);
  expect_trap(short_.status, TrapKind::kFuelExhausted);
  EXPECT_EQ(short_.instret, 1u);
}

TEST(Exec, IndirectJumpIntoDataIsPermissionFault) {
  auto r = run_both(".entry s\n.text\ns: MOVI r1, d\nJMPR r1\n.data\nd: .word 0x00000050\n");
  expect_trap(r.status, TrapKind::kPermissionFault);
}

TEST(Exec, JumpOutsideMemory) {
  auto r = run_both(".entry s\n.text\ns: JMP 0xFFFFFFF0\n");
  expect_trap(r.status, TrapKind::kOutOfBounds);
  auto z = run_both(".entry s\n.text\ns: JMP 0\n");
  expect_trap(z.status, TrapKind::kPermissionFault);
}

TEST(Exec, MidInstructionJumpStaysSandboxed) {
  // The immediate 0x00410050 contains the bytes 50 00 (SYS 0) at +2.
  auto r = run_both(
      ".entry s\n.text\ns: MOVI r0, 9\nJMP a+2\na: MOVI r1, 0x00410050\nMOVI r0, 1\nSYS 0\n");
  ASSERT_EQ(r.status.state, RunState::kExited) << describe(r.status);
  EXPECT_EQ(r.status.exit_code, 9u);
  // Every offset into a long instruction either runs or traps; nothing escapes.
  for (int off = 0; off < 6; ++off) {
    auto x = run_both(".entry s\n.text\ns: JMP a+" + std::to_string(off) +
                      "\na: MOVI r1, 0xFFFFFFFF\nMOVI r0, 3\nSYS 0\n");
    EXPECT_NE(x.status.state, RunState::kRunning);
  }
}

TEST(Exec, TrapKinds) {
  expect_trap(run_both(".entry s\n.text\ns: DIVU r0, r1\n").status, TrapKind::kDivideByZero);
  expect_trap(run_both(".entry s\n.text\ns: REMU r0, r1\n").status, TrapKind::kDivideByZero);
  expect_trap(run_both(".entry s\n.text\ns: SYS 9\n").status, TrapKind::kBadSyscall);
  expect_trap(run_both(".entry s\n.text\ns: MOVI r0, 1\n.byte 0xFF, 0\n").status,
              TrapKind::kInvalidInstruction);
  // Fall off the end of text into an unmapped page.
  expect_trap(run_both(".entry s\n.text\ns: MOVI r0, 1\n").status, TrapKind::kInvalidInstruction);
  expect_trap(run_both(".entry s\n.text\ns: JMP e\n.space 4085\ne: MOVI r0, 1\n").status,
              TrapKind::kPermissionFault);
  expect_trap(run_both(".entry s\n.text\ns: RET\n").status, TrapKind::kStackFault);
  expect_trap(run_both(".entry s\n.text\ns: MOVI r7, 0x10\nCALL s\n").status, TrapKind::kStackFault);
  // Unbounded recursion runs into the guard page.
  expect_trap(run_both(".entry s\n.text\ns: CALL s\n").status, TrapKind::kStackFault);
  // Writes to read-only text.
  expect_trap(run_both(".entry s\n.text\ns: MOVI r1, s\nSTB r0, [r1+0]\n").status,
              TrapKind::kPermissionFault);
}

TEST(Exec, TrapOrdinals) {
  EXPECT_EQ(static_cast<int>(TrapKind::kOutOfBounds), 0);
  EXPECT_EQ(static_cast<int>(TrapKind::kPermissionFault), 1);
  EXPECT_EQ(static_cast<int>(TrapKind::kInvalidInstruction), 2);
  EXPECT_EQ(static_cast<int>(TrapKind::kDivideByZero), 3);
  EXPECT_EQ(static_cast<int>(TrapKind::kBadSyscall), 4);
  EXPECT_EQ(static_cast<int>(TrapKind::kFuelExhausted), 5);
  EXPECT_EQ(static_cast<int>(TrapKind::kStackFault), 6);
}

TEST(Exec, CallAndReturn) {
  auto r = run_both(R"(
.entry s
.text
s:  MOVI r0, 5
    CALL f
    CALL f
    SYS 0
f:  ADDI r0, 10
    RET
)");
  EXPECT_EQ(r.status.exit_code, 25u);
}

namespace {

std::uint32_t reference_alu(isa::Opcode op, std::uint32_t a, std::uint32_t b) {
  using isa::Opcode;
  switch (op) {
    case Opcode::kAdd: return a + b;
    case Opcode::kSub: return a - b;
    case Opcode::kAnd: return a & b;
    case Opcode::kOr: return a | b;
    case Opcode::kXor: return a ^ b;
    case Opcode::kShl: return a << (b % 32);
    case Opcode::kShr: return a >> (b % 32);
    case Opcode::kSar: {
      const std::int64_t s = static_cast<std::int32_t>(a);
      return static_cast<std::uint32_t>(s >> (b % 32));
    }
    case Opcode::kMul: return static_cast<std::uint32_t>(std::uint64_t{a} * b);
    case Opcode::kDivu: return a / b;
    case Opcode::kRemu: return a % b;
    default: return 0;
  }
}

}  // namespace

TEST(Exec, AluMatchesReference) {
  using isa::Opcode;
  const Opcode ops[] = {Opcode::kAdd, Opcode::kSub, Opcode::kAnd, Opcode::kOr,
                        Opcode::kXor, Opcode::kShl, Opcode::kShr, Opcode::kSar,
                        Opcode::kMul, Opcode::kDivu, Opcode::kRemu};
  std::vector<std::uint32_t> values{0, 1, 2, 31, 32, 33, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF, 0xFFFFFFFE};
  std::mt19937 rng(4);
  while (values.size() < 40) values.push_back(rng());
  for (auto op : ops) {
    std::string src = ".entry s\n.text\ns: MOVI r6, out\n";
    std::vector<std::uint32_t> expect;
    for (auto a : values)
      for (auto b : values) {
        if ((op == Opcode::kDivu || op == Opcode::kRemu) && b == 0) continue;
        src += "MOVI r0, " + hex(a) + "\nMOVI r1, " + hex(b) + "\n" +
               std::string(isa::mnemonic(op)) + " r0, r1\nSTW r0, [r6+0]\nADDI r6, 4\n";
        expect.push_back(reference_alu(op, a, b));
      }
    src += "MOVI r0, 1\nMOVI r1, out\nMOVI r2, " + std::to_string(expect.size() * 4) +
           "\nSYS 2\nMOVI r0, 0\nSYS 0\n.data\nout: .space " + std::to_string(expect.size() * 4) + "\n";
    auto r = run_both(src);
    ASSERT_EQ(r.status.state, RunState::kExited) << describe(r.status);
    ASSERT_EQ(r.output.size(), expect.size() * 4);
    for (std::size_t i = 0; i < expect.size(); ++i)
      ASSERT_EQ(load_le32(r.output.data() + 4 * i), expect[i]) << isa::mnemonic(op) << " case " << i;
  }
}

TEST(Exec, AddiAndBranchesSigned) {
  auto r = run_both(R"(
.entry s
.text
s:  MOVI r0, 0
    MOVI r1, -1
    MOVI r2, 1
    BLT r1, r2, t1      ; signed: -1 < 1
    SYS 0
t1: ADDI r0, 1
    BLTU r1, r2, bad    ; unsigned: 0xFFFFFFFF > 1
    BGEU r1, r2, t2
bad: MOVI r0, 99
    SYS 0
t2: ADDI r0, 2
    BGE r2, r1, t3
    JMP bad
t3: ADDI r0, -8
    SYS 0
)");
  EXPECT_EQ(r.status.exit_code, static_cast<std::uint32_t>(-5));
}

TEST(Exec, ByteLoadsZeroExtend) {
  auto r = run_both(".entry s\n.text\ns: MOVI r1, d\nLDB r0, [r1+0]\nSYS 0\n.data\nd: .byte 0xF0\n");
  EXPECT_EQ(r.status.exit_code, 0xF0u);
}

TEST(Syscalls, ReadReturnsCountsThenEof) {
  const std::string src = R"(
.entry s
.text
s:  MOVI r0, 0
    MOVI r1, buf
    MOVI r2, 16
    SYS 1
    MOV r5, r0
    MOVI r0, 0
    MOVI r1, buf
    MOVI r2, 16
    SYS 1
    MOV r4, r0
    MOVI r0, 1
    MOVI r1, buf
    MOV r2, r5
    SYS 2
    MOV r0, r4
    MOVI r1, 8
    SHL r5, r1
    OR r0, r5
    SYS 0
.data
buf: .space 16
)";
  auto r = run_both(src, as_bytes("abc"));
  EXPECT_EQ(r.status.exit_code, 3u << 8);  // 3 then 0
  EXPECT_EQ(to_string(r.output), "abc");
  EXPECT_EQ(r.counters.bytes_in, 3u);
  EXPECT_EQ(r.counters.bytes_out, 3u);
}

TEST(Syscalls, ReadIntoTextFaults) {
  auto r = run_both(".entry s\n.text\ns: MOVI r0, 0\nMOVI r1, s\nMOVI r2, 4\nSYS 1\nSYS 0\n", as_bytes("x"));
  expect_trap(r.status, TrapKind::kPermissionFault);
}

TEST(Syscalls, ReadPastLimitFaults) {
  auto r = run_both(".entry s\n.text\ns: MOVI r0, 0\nMOV r1, r7\nADDI r1, -4\nMOVI r2, 8\nSYS 1\nSYS 0\n",
                    as_bytes("x"));
  expect_trap(r.status, TrapKind::kOutOfBounds);
}

TEST(Syscalls, BadFdsReturnMinusOne) {
  auto w = run_both(".entry s\n.text\ns: MOVI r0, 0\nMOVI r1, s\nMOVI r2, 1\nSYS 2\nSYS 0\n");
  EXPECT_EQ(w.status.exit_code, 0xFFFFFFFFu);
  auto rd = run_both(".entry s\n.text\ns: MOVI r0, 3\nMOV r1, r7\nADDI r1, -8\nMOVI r2, 1\nSYS 1\nSYS 0\n");
  EXPECT_EQ(rd.status.exit_code, 0xFFFFFFFFu);
}

TEST(Syscalls, DiagnosticsOnlyWhenVerbose) {
  const auto img = isa::assemble(
      ".entry s\n.text\ns: MOVI r0, 2\nMOVI r1, m\nMOVI r2, 2\nSYS 2\nSYS 0\n.data\nm: .ascii \"hi\"\n");
  Bytes out, diag;
  Machine quiet(img, small(), {{}, &out, &diag, false});
  quiet.run();
  EXPECT_EQ(quiet.status().exit_code, 2u);  // bytes accepted
  EXPECT_TRUE(diag.empty());
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(quiet.counters().bytes_diag, 2u);
  Machine loud(img, small(), {{}, &out, &diag, true});
  loud.run();
  EXPECT_EQ(to_string(diag), "hi");
}

TEST(Syscalls, OutputLimit) {
  const auto img = isa::assemble(
      ".entry s\n.text\ns: MOVI r0, 1\nMOVI r1, m\nMOVI r2, 4\nSYS 2\nSYS 0\n.data\nm: .ascii \"abcd\"\n");
  Bytes out;
  Machine m(img, small(), {{}, &out, nullptr, false, 3});
  m.run();
  EXPECT_EQ(m.status().exit_code, 0xFFFFFFFFu);
  EXPECT_TRUE(m.output_overflowed());
  EXPECT_TRUE(out.empty());
}

TEST(Syscalls, SetpermHeap) {
  auto r = run_both(R"(
.entry s
.text
s:  MOVI r0, 0x00080000
    MOVI r1, 8192
    MOVI r2, 3
    SYS 3
    MOV r5, r0
    MOVI r1, 0x00081000
    MOVI r2, 77
    STW r2, [r1+8]
    LDW r0, [r1+8]
    ADD r0, r5
    SYS 0
)");
  EXPECT_EQ(r.status.exit_code, 77u);
}

TEST(Syscalls, SetpermRejections) {
  const std::string lim = hex(kSmall);
  const std::string guard = hex(kSmall - kStackSize - 4096);
  const char* bad[][3] = {
      {"0x80000", "4096", "7"},     // W|X
      {"0x80001", "4096", "3"},     // unaligned
      {"0x80000", "100", "3"},      // partial page
      {"0x80000", "4096", "8"},     // unknown bit
  };
  for (auto& b : bad) {
    auto r = run_both(std::string(".entry s\n.text\ns: MOVI r0, ") + b[0] + "\nMOVI r1, " + b[1] +
                      "\nMOVI r2, " + b[2] + "\nSYS 3\nSYS 0\n");
    EXPECT_EQ(r.status.exit_code, 0xFFFFFFFFu) << b[0] << " " << b[1] << " " << b[2];
  }
  auto at_limit = run_both(".entry s\n.text\ns: MOVI r0, " + lim + "\nMOVI r1, 4096\nMOVI r2, 3\nSYS 3\nSYS 0\n");
  EXPECT_EQ(at_limit.status.exit_code, 0xFFFFFFFFu);
  auto guard_page = run_both(".entry s\n.text\ns: MOVI r0, " + guard + "\nMOVI r1, 4096\nMOVI r2, 3\nSYS 3\nSYS 0\n");
  EXPECT_EQ(guard_page.status.exit_code, 0xFFFFFFFFu);
  auto stack = run_both(".entry s\n.text\ns: MOV r0, r7\nADDI r0, -4096\nMOVI r1, 4096\nMOVI r2, 5\nSYS 3\nSYS 0\n");
  EXPECT_EQ(stack.status.exit_code, 0xFFFFFFFFu);
}

TEST(Syscalls, WxAttemptThenStoreFaults) {
  auto r = run_both(R"(
.entry s
.text
s:  MOVI r0, 0x1000
    MOVI r1, 4096
    MOVI r2, 7
    SYS 3
    MOVI r1, 0x1000
    STW r0, [r1+0]
    SYS 0
)");
  expect_trap(r.status, TrapKind::kPermissionFault);
}

TEST(Syscalls, GeneratedCodeRunsAfterRemap) {
  // Write code into a fresh page, flip it to R|X and jump there.
  auto r = run_both(R"(
.entry s
.text
s:  MOVI r0, 0x80000
    MOVI r1, 4096
    MOVI r2, 3
    SYS 3
    MOVI r1, 0x80000
    MOVI r2, 0x002A0001   ; MOVI r0, 42 (first four bytes)
    STW r2, [r1+0]
    MOVI r2, 0x00500000   ; rest of imm, then SYS 0
    STW r2, [r1+4]
    MOVI r0, 0x80000
    MOVI r1, 4096
    MOVI r2, 5
    SYS 3
    MOVI r1, 0x80000
    JMPR r1
)");
  ASSERT_EQ(r.status.state, RunState::kExited) << describe(r.status);
  EXPECT_EQ(r.status.exit_code, 42u);
}

TEST(Syscalls, CodeChangeInvalidatesCache) {
  // Run generated code, rewrite it, run again: the second run must see the
  // new bytes.
  auto r = run_both(R"(
.entry s
.text
s:  MOVI r5, 1
    CALL emit
    MOVI r1, 0x80000
    MOVI r3, back1
    JMPR r1
back1:
    MOV r6, r0
    MOVI r5, 2
    CALL emit
    MOVI r1, 0x80000
    MOVI r3, back2
    JMPR r1
back2:
    MOVI r1, 4
    SHL r6, r1
    OR r0, r6
    SYS 0
; emits "MOVI r0, r5; JMPR r3" at 0x80000
emit:
    MOVI r0, 0x80000
    MOVI r1, 4096
    MOVI r2, 3
    SYS 3
    MOVI r1, 0x80000
    MOVI r2, 8
    MOV r4, r5
    SHL r4, r2
    SHL r4, r2
    MOVI r2, 0x0001
    OR r2, r4
    STW r2, [r1+0]
    MOVI r2, 0x03310000
    STW r2, [r1+4]
    MOVI r0, 0x80000
    MOVI r1, 4096
    MOVI r2, 5
    SYS 3
    RET
)");
  ASSERT_EQ(r.status.state, RunState::kExited) << describe(r.status);
  EXPECT_EQ(r.status.exit_code, 0x12u);
}

TEST(Cache, FunctionPointerLoopTranslatesOnce) {
  const auto img = isa::assemble(R"(
.entry s
.text
s:  MOVI r5, 1000000
    MOVI r4, 0
    MOVI r6, f
loop:
    MOVI r3, back
    JMPR r6
f:  ADDI r4, 1
    JMPR r3
back:
    BNE r4, r5, loop
    MOV r0, r4
    SYS 0
)");
  Machine m(img, MachineConfig{}, {});
  m.run();
  ASSERT_EQ(m.status().state, RunState::kExited);
  EXPECT_EQ(m.status().exit_code, 1000000u);
  EXPECT_LE(m.counters().translations, 2 * m.cached_fragments());
  EXPECT_LT(m.counters().translations, 16u);
  EXPECT_GT(m.counters().indirect_hits, 1900000u);
}

TEST(Cache, TranslateAndLookupPrimitives) {
  const auto img = isa::assemble(
      ".entry s\n.text\ns: MOVI r0, 1\nADDI r0, 2\nJMP s\n.data\nd: .word 0\n");
  Machine m(img, small(), {});
  const Fragment& f = m.translate_fragment(isa::kTextBase);
  EXPECT_EQ(f.guest_entry, isa::kTextBase);
  ASSERT_EQ(f.ops.size(), 3u);
  EXPECT_EQ(f.exit, ExitKind::kDirect);
  EXPECT_EQ(f.taken_target, isa::kTextBase);
  const Fragment& g = m.lookup_indirect(isa::kTextBase);
  EXPECT_EQ(g.guest_entry, isa::kTextBase);
  const Fragment& bad = m.lookup_indirect(0x2000);  // data page
  ASSERT_EQ(bad.ops.size(), 1u);
  EXPECT_EQ(bad.ops[0].code, kTrapOp);
  EXPECT_EQ(bad.ops[0].a, static_cast<std::uint8_t>(TrapKind::kPermissionFault));
}

TEST(Cache, CheckedAccess) {
  const auto img = isa::assemble(".entry s\n.text\ns: SYS 0\n.data\nd: .word 0\n");
  Machine m(img, small(), {});
  EXPECT_TRUE(m.checked_access(0x2000, 4, isa::kPermW).ok);
  EXPECT_TRUE(m.checked_access(0x1000, 2, isa::kPermX).ok);
  auto w = m.checked_access(0x1000, 2, isa::kPermW);
  EXPECT_FALSE(w.ok);
  EXPECT_EQ(w.kind, TrapKind::kPermissionFault);
  auto span = m.checked_access(0x2FFE, 4, isa::kPermR);  // crosses into unmapped page
  EXPECT_FALSE(span.ok);
  EXPECT_EQ(span.fault_vaddr, 0x3000u);
  auto oob = m.checked_access(static_cast<std::uint32_t>(kSmall - 2), 4, isa::kPermR);
  EXPECT_EQ(oob.kind, TrapKind::kOutOfBounds);
  auto wrap = m.checked_access(0xFFFFFFFF, 2, isa::kPermR);
  EXPECT_EQ(wrap.kind, TrapKind::kOutOfBounds);
}

TEST(Cache, DifferentialRandomPrograms) {
  // Random bytes as code, run with and without the cache: identical
  // status, instruction count, registers and memory.
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick(0, 28);
  const std::uint8_t ops[] = {0x01, 0x02, 0x10, 0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17,
                              0x18, 0x19, 0x1A, 0x1B, 0x20, 0x21, 0x22, 0x23, 0x30, 0x31,
                              0x32, 0x33, 0x34, 0x35, 0x36, 0x37, 0x40, 0x41, 0x50};
  int finished = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    isa::ExecutableImage img;
    img.entry = isa::kTextBase;
    Bytes code;
    while (code.size() < 200) {
      const std::uint8_t op = ops[pick(rng)];
      Bytes b(isa::length_of(op));
      b[0] = op;
      for (std::size_t i = 1; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(rng());
      if (b.size() >= 2 && rng() % 4) b[1] &= 0x77;
      if (op >= 0x30 && op <= 0x40 && op != 0x31 && rng() % 2) {
        const std::uint32_t t = isa::kTextBase + static_cast<std::uint32_t>(rng() % 200);
        const std::size_t at = op == 0x30 || op == 0x40 ? 1 : 2;
        store_le32(b.data() + at, t);
      }
      if (op == 0x50) b[1] = static_cast<std::uint8_t>(rng() % 6);
      code.insert(code.end(), b.begin(), b.end());
    }
    isa::Segment text;
    text.header = {isa::kTextBase, static_cast<std::uint32_t>(code.size()), 4096, isa::kPermR | isa::kPermX, 0};
    text.data = code;
    isa::Segment data;
    data.header = {0x2000, 0, 4096, isa::kPermR | isa::kPermW, 0};
    img.segments = {text, data};

    MachineConfig c = small();
    c.fuel = 5000;
    const Bytes input = vxtest::random_bytes(rng, 64);
    Bytes o1, o2;
    Machine a(img, c, {input, &o1, nullptr, false});
    c.use_cache = false;
    Machine b(img, c, {input, &o2, nullptr, false});
    a.run();
    b.run();
    ASSERT_EQ(a.status(), b.status()) << "trial " << trial << ": " << describe(a.status()) << " vs "
                                      << describe(b.status());
    ASSERT_EQ(a.instret(), b.instret()) << "trial " << trial;
    ASSERT_EQ(a.regs(), b.regs()) << "trial " << trial;
    ASSERT_EQ(a.pc(), b.pc()) << "trial " << trial;
    ASSERT_EQ(a.state_digest(), b.state_digest()) << "trial " << trial;
    ASSERT_EQ(o1, o2);
    if (a.status().state == RunState::kExited) ++finished;
  }
  EXPECT_GT(finished, 0);
}

TEST(Reuse, RleTwoStreamsOnOneMachine) {
  const auto img = isa::validate_image(codecs::bundled_decoder("rle"));
  Bytes out1, out2;
  const Bytes s1 = codecs::encode_rle(as_bytes("aaab"));
  const Bytes s2 = codecs::encode_rle(Bytes(300, 'x'));
  Machine m(img, MachineConfig{}, {s1, &out1});
  ASSERT_EQ(m.run().state, RunState::kStreamDone);
  EXPECT_EQ(to_string(out1), "aaab");
  const auto first = m.instret();
  m.rebind({s2, &out2});
  ASSERT_EQ(m.run().state, RunState::kStreamDone);
  EXPECT_EQ(out2, Bytes(300, 'x'));
  EXPECT_GT(m.instret(), first);
  EXPECT_EQ(to_string(out1), "aaab");
}

TEST(Reuse, FreshMachineSeesNoResidue) {
  // Decode a secret, then build a new machine from the same decoder and run
  // a probe over the pages the decoder used.
  const std::string secret = "TOP-SECRET-PAYLOAD-0123456789";
  Bytes secret_bytes = to_bytes(secret);
  const auto img = isa::validate_image(codecs::bundled_decoder("rle"));
  Bytes out;
  const Bytes encoded = codecs::encode_rle(secret_bytes);
  {
    Machine m(img, MachineConfig{}, {encoded, &out});
    m.run();
  }
  ASSERT_EQ(to_string(out), secret);

  // The probe maps a large region and dumps it along with its own stack.
  const auto probe = isa::assemble(R"(
.entry s
.text
s:  MOVI r0, 0x2000
    MOVI r1, 0x00400000
    MOVI r2, 1
    SYS 3
    MOVI r0, 1
    MOVI r1, 0x2000
    MOVI r2, 0x00400000
    SYS 2
    MOVI r0, 1
    MOV r1, r7
    ADDI r1, -65536
    MOVI r2, 65536
    SYS 2
    MOVI r0, 0
    SYS 0
)");
  Bytes dump;
  Machine p(probe, MachineConfig{}, {{}, &dump});
  p.run();
  ASSERT_EQ(p.status().state, RunState::kExited) << describe(p.status());
  EXPECT_EQ(dump.size(), 0x00400000u + 65536u);
  EXPECT_EQ(std::search(dump.begin(), dump.end(), secret_bytes.begin(), secret_bytes.end()), dump.end());
  EXPECT_TRUE(std::all_of(dump.begin(), dump.end(), [](std::uint8_t b) { return b == 0; }));

  // Same guarantee for a second machine from the decoder image itself.
  Machine again(img, MachineConfig{}, {});
  Machine fresh(img, MachineConfig{}, {});
  EXPECT_EQ(again.state_digest(), fresh.state_digest());
}

TEST(Config, RejectsBadLimits) {
  const auto img = isa::assemble(".entry s\n.text\ns: SYS 0\n");
  MachineConfig c;
  c.mem_limit = 12345;
  EXPECT_THROW(Machine(img, c, {}), std::invalid_argument);
  c.mem_limit = 1ull << 31;
  EXPECT_THROW(Machine(img, c, {}), std::invalid_argument);
  // Image that does not fit below the stack guard.
  const auto big = isa::assemble(".entry s\n.text\ns: SYS 0\n.data\n.space 0x100000\n");
  c.mem_limit = 1 << 20;
  EXPECT_THROW(Machine(big, c, {}), isa::ImageError);
}

TEST(Bundled, VxflateDecoderUsesCache) {
  std::mt19937_64 rng(31);
  const Bytes in = vxtest::random_text(rng, 200000);
  auto r = vxtest::run_bundled("vxflate", codecs::encode_vxflate(in));
  ASSERT_EQ(r.status.state, RunState::kStreamDone) << describe(r.status);
  EXPECT_EQ(r.output, in);
  EXPECT_LT(r.counters.translations, 200u);
  EXPECT_GT(r.instret, 1000000u);
}
