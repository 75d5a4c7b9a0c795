#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "vxa/bytes.hpp"
#include "vxa/isa/image.hpp"

namespace vxa::vm {

inline constexpr std::uint64_t kDefaultMemLimit = 1ull << 28;
inline constexpr std::uint64_t kDefaultFuel = 1ull << 33;
inline constexpr std::uint32_t kStackSize = 65536;
inline constexpr std::uint32_t kMaxFragmentOps = 128;

// Ordinals are part of the CLI exit-status contract (70 + ordinal).
enum class TrapKind : std::uint8_t {
  kOutOfBounds = 0,
  kPermissionFault = 1,
  kInvalidInstruction = 2,
  kDivideByZero = 3,
  kBadSyscall = 4,
  kFuelExhausted = 5,
  kStackFault = 6,
};

const char* to_string(TrapKind kind);

struct TrapReason {
  TrapKind kind = TrapKind::kOutOfBounds;
  std::uint32_t vaddr = 0;
  std::uint32_t pc_at_trap = 0;

  friend bool operator==(const TrapReason&, const TrapReason&) = default;
};

enum class RunState : std::uint8_t { kRunning, kExited, kStreamDone, kTrapped };

struct Status {
  RunState state = RunState::kRunning;
  std::uint32_t exit_code = 0;  // valid when kExited
  TrapReason trap;              // valid when kTrapped

  bool running() const { return state == RunState::kRunning; }
  bool trapped() const { return state == RunState::kTrapped; }

  friend bool operator==(const Status&, const Status&) = default;
};

std::string describe(const Status& status);

enum Syscall : std::uint8_t {
  kSysExit = 0,
  kSysRead = 1,
  kSysWrite = 2,
  kSysSetperm = 3,
  kSysDone = 4,
};

// The guest's only channels to the outside: fd 0 reads `input`, fd 1
// appends to `output`, fd 2 appends to `diagnostics` when verbose and is
// otherwise discarded. Null sinks discard.
struct SyscallBinding {
  ByteView input;
  Bytes* output = nullptr;
  Bytes* diagnostics = nullptr;
  bool verbose = false;
  // Writes to fd 1 that would push output past this many bytes fail with -1.
  std::uint64_t output_limit = UINT64_MAX;
};

struct MachineConfig {
  std::uint64_t mem_limit = kDefaultMemLimit;
  std::uint64_t fuel = kDefaultFuel;  // per stream; restored on rebind()
  bool use_cache = true;              // false: decode every instruction each time
  bool link_fragments = true;         // false: every transfer goes through lookup
};

struct Counters {
  std::uint64_t translations = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t indirect_lookups = 0;
  std::uint64_t indirect_hits = 0;
  std::uint64_t links_patched = 0;
  std::uint64_t flushes = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t bytes_diag = 0;
};

// Predecoded instruction. `code` is the guest opcode or kTrapOp.
struct Op {
  std::uint8_t code = 0;
  std::uint8_t a = 0;  // rd / ra / trap kind
  std::uint8_t b = 0;  // rs / rb
  std::uint8_t len = 0;
  std::uint32_t imm = 0;  // imm32, sign-extended disp, sysno, or fault vaddr
  std::uint32_t pc = 0;
};

inline constexpr std::uint8_t kTrapOp = 0xF0;

enum class ExitKind : std::uint8_t {
  kDirect,       // JMP, CALL
  kConditional,  // Bcc
  kIndirect,     // JMPR, RET
  kSyscall,
  kFallthrough,  // length cap reached
  kTrap,         // decode-time fault
};

struct Fragment {
  std::uint32_t guest_entry = 0;
  std::vector<Op> ops;
  ExitKind exit = ExitKind::kFallthrough;
  std::uint32_t taken_target = 0;
  std::uint32_t fall_target = 0;
  // Back-patched successors; null until resolved.
  Fragment* taken_link = nullptr;
  Fragment* fall_link = nullptr;
};

struct AccessResult {
  bool ok = false;
  TrapKind kind = TrapKind::kOutOfBounds;
  std::uint32_t fault_vaddr = 0;
  std::uint64_t host_offset = 0;
};

class Machine {
 public:
  // Throws std::invalid_argument for a bad limit and isa::ImageError
  // (kLimitExceeded) when the image does not fit below the stack guard.
  Machine(const isa::ExecutableImage& image, const MachineConfig& config,
          SyscallBinding binding);
  ~Machine();

  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;
  Machine(Machine&&) noexcept;
  Machine& operator=(Machine&&) noexcept;

  // Runs until exit, done, or a trap. Throws std::logic_error unless the
  // machine is Running.
  const Status& run();

  // After StreamDone: attach the next stream, restore fuel, resume at the
  // instruction following the SYS. Throws std::logic_error otherwise.
  void rebind(SyscallBinding binding);

  const Status& status() const { return status_; }
  std::uint32_t pc() const { return pc_; }
  const std::array<std::uint32_t, 8>& regs() const { return regs_; }
  std::uint64_t instret() const { return instret_; }
  std::uint64_t fuel() const { return fuel_; }
  std::uint64_t mem_limit() const { return limit_; }
  const Counters& counters() const { return counters_; }
  bool output_overflowed() const { return output_overflow_; }
  std::uint8_t page_perm(std::uint32_t page) const;
  std::size_t cached_fragments() const { return cache_.size(); }

  // Bounds-checked view of guest memory, ignoring permissions.
  Bytes peek(std::uint32_t vaddr, std::uint32_t len) const;
  // Hash of registers, pc, page permissions and mapped memory.
  std::uint64_t state_digest() const;

  // Sandbox primitives, public for direct testing.
  AccessResult checked_access(std::uint32_t vaddr, std::uint32_t size,
                              std::uint8_t need_perm) const;
  const Fragment& translate_fragment(std::uint32_t vaddr);
  // Returns the cached or freshly translated fragment for an indirect
  // target. A target outside executable pages yields a fragment whose only
  // op raises the fault, so the trap surfaces when it executes.
  const Fragment& lookup_indirect(std::uint32_t target);

 private:
  enum class Action : std::uint8_t { kNext, kJump, kTrap, kStop };

  struct IndirectTable {
    std::vector<std::pair<std::uint32_t, Fragment*>> slots;
    std::size_t used = 0;
    Fragment* find(std::uint32_t key) const;
    void insert(std::uint32_t key, Fragment* f);
    void clear();
  };

  Op decode_op(std::uint32_t pc) const;
  Fragment* lookup(std::uint32_t vaddr);
  Fragment* indirect(std::uint32_t target);
  Fragment* translate(std::uint32_t vaddr);
  void flush_cache();

  Action step(const Op& op, std::uint32_t& next);
  Action syscall(const Op& op);
  void trap(TrapKind kind, std::uint32_t vaddr, std::uint32_t pc);

  void run_cached();
  void run_uncached();

  bool load32(std::uint32_t addr, std::uint32_t& v, const Op& op, TrapKind as);
  bool store32(std::uint32_t addr, std::uint32_t v, const Op& op, TrapKind as);

  MachineConfig config_;
  SyscallBinding binding_;
  std::uint64_t input_pos_ = 0;
  std::uint64_t limit_ = 0;

  struct FreeDeleter {
    void operator()(std::uint8_t* p) const;
  };
  std::unique_ptr<std::uint8_t[], FreeDeleter> mem_;
  std::vector<std::uint8_t> perms_;

  std::array<std::uint32_t, 8> regs_{};
  std::uint32_t pc_ = 0;
  std::uint64_t fuel_ = 0;
  std::uint64_t instret_ = 0;
  Status status_;
  bool output_overflow_ = false;
  bool flush_pending_ = false;

  std::unordered_map<std::uint32_t, std::unique_ptr<Fragment>> cache_;
  IndirectTable indirect_;
  Counters counters_;
};

}  // namespace vxa::vm
