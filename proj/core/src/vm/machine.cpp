#include "vxa/vm/machine.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "vxa/isa/instruction.hpp"

namespace vxa::vm {

using isa::kPageSize;
using isa::kPermR;
using isa::kPermW;
using isa::kPermX;
using isa::Opcode;

namespace {

constexpr std::uint32_t kEmptyKey = 0xFFFFFFFFu;
constexpr std::uint32_t kErr = 0xFFFFFFFFu;

constexpr std::uint8_t op(Opcode o) { return static_cast<std::uint8_t>(o); }

bool is_control(std::uint8_t code) {
  switch (code) {
    case op(Opcode::kJmp):
    case op(Opcode::kJmpr):
    case op(Opcode::kBeq):
    case op(Opcode::kBne):
    case op(Opcode::kBltu):
    case op(Opcode::kBgeu):
    case op(Opcode::kBlt):
    case op(Opcode::kBge):
    case op(Opcode::kCall):
    case op(Opcode::kRet):
    case op(Opcode::kSys):
    case kTrapOp:
      return true;
    default:
      return false;
  }
}

Op trap_op(std::uint32_t pc, TrapKind kind, std::uint32_t vaddr) {
  Op o;
  o.code = kTrapOp;
  o.a = static_cast<std::uint8_t>(kind);
  o.imm = vaddr;
  o.pc = pc;
  return o;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

const char* to_string(TrapKind kind) {
  switch (kind) {
    case TrapKind::kOutOfBounds: return "OutOfBounds";
    case TrapKind::kPermissionFault: return "PermissionFault";
    case TrapKind::kInvalidInstruction: return "InvalidInstruction";
    case TrapKind::kDivideByZero: return "DivideByZero";
    case TrapKind::kBadSyscall: return "BadSyscall";
    case TrapKind::kFuelExhausted: return "FuelExhausted";
    case TrapKind::kStackFault: return "StackFault";
  }
  return "unknown";
}

std::string describe(const Status& s) {
  switch (s.state) {
    case RunState::kRunning: return "running";
    case RunState::kExited: return "exited(" + std::to_string(s.exit_code) + ")";
    case RunState::kStreamDone: return "stream-done";
    case RunState::kTrapped:
      return std::string("trap ") + to_string(s.trap.kind) + " at pc " + hex32(s.trap.pc_at_trap) +
             " vaddr " + hex32(s.trap.vaddr);
  }
  return "unknown";
}

void Machine::FreeDeleter::operator()(std::uint8_t* p) const { std::free(p); }

// ---- indirect-branch table --------------------------------------------

Fragment* Machine::IndirectTable::find(std::uint32_t key) const {
  if (slots.empty()) return nullptr;
  const std::size_t mask = slots.size() - 1;
  for (std::size_t i = (key * 2654435761u) & mask;; i = (i + 1) & mask) {
    if (slots[i].first == key) return slots[i].second;
    if (slots[i].first == kEmptyKey) return nullptr;
  }
}

void Machine::IndirectTable::insert(std::uint32_t key, Fragment* f) {
  if (slots.empty() || (used + 1) * 2 > slots.size()) {
    std::vector<std::pair<std::uint32_t, Fragment*>> old;
    old.swap(slots);
    slots.assign(std::max<std::size_t>(1024, old.size() * 2), {kEmptyKey, nullptr});
    used = 0;
    for (const auto& [k, v] : old)
      if (k != kEmptyKey) insert(k, v);
  }
  const std::size_t mask = slots.size() - 1;
  for (std::size_t i = (key * 2654435761u) & mask;; i = (i + 1) & mask) {
    if (slots[i].first == key) {
      slots[i].second = f;
      return;
    }
    if (slots[i].first == kEmptyKey) {
      slots[i] = {key, f};
      ++used;
      return;
    }
  }
}

void Machine::IndirectTable::clear() {
  slots.clear();
  used = 0;
}

// ---- construction -------------------------------------------------------

Machine::Machine(const isa::ExecutableImage& image, const MachineConfig& config,
                 SyscallBinding binding)
    : config_(config), binding_(binding), limit_(config.mem_limit) {
  if (limit_ % kPageSize != 0 || limit_ > isa::kMaxGuestMemory ||
      limit_ < 2 * std::uint64_t{kStackSize})
    throw std::invalid_argument("guest memory limit must be page aligned, >= 128 KiB and <= 1 GiB");

  const std::uint64_t guard_start = limit_ - kStackSize - kPageSize;
  // Re-validating through the wire form checks W^X, overlap and the limit
  // even for images that were assembled in memory.
  isa::validate_image(isa::serialize_image(image), guard_start);

  mem_.reset(static_cast<std::uint8_t*>(std::calloc(static_cast<std::size_t>(limit_), 1)));
  if (!mem_) throw std::bad_alloc();
  perms_.assign(static_cast<std::size_t>(limit_ / kPageSize), 0);

  for (const auto& seg : image.segments) {
    if (!seg.data.empty()) std::memcpy(mem_.get() + seg.header.vaddr, seg.data.data(), seg.data.size());
    for (std::uint64_t p = seg.header.vaddr / kPageSize;
         p < (std::uint64_t{seg.header.vaddr} + seg.header.memsz) / kPageSize; ++p)
      perms_[p] = seg.header.perm;
  }
  for (std::uint64_t p = (limit_ - kStackSize) / kPageSize; p < limit_ / kPageSize; ++p)
    perms_[p] = kPermR | kPermW;

  regs_[isa::kStackReg] = static_cast<std::uint32_t>(limit_);
  pc_ = image.entry;
  fuel_ = config_.fuel;
}

Machine::~Machine() = default;
Machine::Machine(Machine&&) noexcept = default;
Machine& Machine::operator=(Machine&&) noexcept = default;

// ---- inspection -----------------------------------------------------------

std::uint8_t Machine::page_perm(std::uint32_t page) const {
  return page < perms_.size() ? perms_[page] : 0;
}

Bytes Machine::peek(std::uint32_t vaddr, std::uint32_t len) const {
  if (std::uint64_t{vaddr} + len > limit_) throw std::out_of_range("peek outside guest memory");
  return Bytes(mem_.get() + vaddr, mem_.get() + vaddr + len);
}

std::uint64_t Machine::state_digest() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 1099511628211ull;
  };
  mix(regs_.data(), sizeof regs_);
  mix(&pc_, sizeof pc_);
  mix(perms_.data(), perms_.size());
  for (std::size_t p = 0; p < perms_.size(); ++p)
    if (perms_[p]) mix(mem_.get() + p * kPageSize, kPageSize);
  return h;
}

AccessResult Machine::checked_access(std::uint32_t vaddr, std::uint32_t size,
                                     std::uint8_t need) const {
  AccessResult r;
  r.fault_vaddr = vaddr;
  const std::uint64_t end = std::uint64_t{vaddr} + size;
  if (end > limit_) {
    r.kind = TrapKind::kOutOfBounds;
    return r;
  }
  if (size == 0) {
    r.ok = true;
    r.host_offset = vaddr;
    return r;
  }
  for (std::uint64_t p = vaddr / kPageSize; p <= (end - 1) / kPageSize; ++p) {
    if ((perms_[p] & need) != need) {
      r.kind = TrapKind::kPermissionFault;
      r.fault_vaddr = static_cast<std::uint32_t>(std::max<std::uint64_t>(vaddr, p * kPageSize));
      return r;
    }
  }
  r.ok = true;
  r.host_offset = vaddr;
  return r;
}

// ---- translation ------------------------------------------------------------

Op Machine::decode_op(std::uint32_t pc) const {
  if (pc >= limit_) return trap_op(pc, TrapKind::kOutOfBounds, pc);
  if (!(perms_[pc / kPageSize] & kPermX)) return trap_op(pc, TrapKind::kPermissionFault, pc);

  // Executable bytes visible from pc: the rest of this page plus the next
  // page when it is also executable. Eight bytes cover any encoding.
  std::uint64_t page_end = (std::uint64_t{pc} / kPageSize + 1) * kPageSize;
  std::uint64_t avail = page_end - pc;
  if (avail < 8 && page_end < limit_ && (perms_[page_end / kPageSize] & kPermX)) avail += kPageSize;
  avail = std::min<std::uint64_t>(avail, 8);

  const isa::Decoded d =
      isa::decode_instruction(ByteView(mem_.get() + pc, static_cast<std::size_t>(avail)), 0);
  if (d.status == isa::DecodeStatus::kTruncated) {
    const std::uint64_t fault = std::uint64_t{pc} + avail;
    return trap_op(pc, fault >= limit_ ? TrapKind::kOutOfBounds : TrapKind::kPermissionFault,
                   static_cast<std::uint32_t>(fault));
  }
  if (d.status != isa::DecodeStatus::kOk) return trap_op(pc, TrapKind::kInvalidInstruction, pc);

  const isa::Instruction& i = d.insn;
  Op o;
  o.code = static_cast<std::uint8_t>(i.opcode);
  o.len = i.length;
  o.pc = pc;
  switch (isa::format_of(o.code)) {
    case isa::Format::kRegImm:
      o.a = i.rd;
      o.imm = i.imm;
      break;
    case isa::Format::kRegReg:
      o.a = i.rd;
      o.b = i.rs;
      break;
    case isa::Format::kMem:
      o.a = i.rd;
      o.b = i.rs;
      o.imm = static_cast<std::uint32_t>(static_cast<std::int32_t>(i.disp));
      break;
    case isa::Format::kImm:
      o.imm = i.imm;
      break;
    case isa::Format::kReg:
      o.b = i.rs;
      break;
    case isa::Format::kBranch:
      o.a = i.ra;
      o.b = i.rb;
      o.imm = i.imm;
      break;
    case isa::Format::kSys:
      o.imm = i.sysno;
      break;
    case isa::Format::kNone:
    case isa::Format::kInvalid:
      break;
  }
  return o;
}

Fragment* Machine::translate(std::uint32_t vaddr) {
  auto frag = std::make_unique<Fragment>();
  frag->guest_entry = vaddr;
  std::uint32_t pc = vaddr;
  while (true) {
    const Op o = decode_op(pc);
    frag->ops.push_back(o);
    if (is_control(o.code)) {
      const std::uint32_t next = pc + o.len;
      switch (o.code) {
        case kTrapOp:
          frag->exit = ExitKind::kTrap;
          break;
        case op(Opcode::kJmp):
        case op(Opcode::kCall):
          frag->exit = ExitKind::kDirect;
          frag->taken_target = o.imm;
          break;
        case op(Opcode::kJmpr):
        case op(Opcode::kRet):
          frag->exit = ExitKind::kIndirect;
          break;
        case op(Opcode::kSys):
          frag->exit = ExitKind::kSyscall;
          frag->fall_target = next;
          break;
        default:
          frag->exit = ExitKind::kConditional;
          frag->taken_target = o.imm;
          frag->fall_target = next;
          break;
      }
      break;
    }
    pc += o.len;
    if (frag->ops.size() == kMaxFragmentOps) {
      frag->exit = ExitKind::kFallthrough;
      frag->fall_target = pc;
      break;
    }
  }

  if (config_.link_fragments) {
    auto existing = [this](std::uint32_t t) -> Fragment* {
      auto it = cache_.find(t);
      return it == cache_.end() ? nullptr : it->second.get();
    };
    if (frag->exit == ExitKind::kDirect || frag->exit == ExitKind::kConditional)
      frag->taken_link = existing(frag->taken_target);
    if (frag->exit == ExitKind::kConditional || frag->exit == ExitKind::kSyscall ||
        frag->exit == ExitKind::kFallthrough)
      frag->fall_link = existing(frag->fall_target);
  }

  ++counters_.translations;
  Fragment* raw = frag.get();
  cache_[vaddr] = std::move(frag);
  indirect_.insert(vaddr, raw);
  return raw;
}

Fragment* Machine::lookup(std::uint32_t vaddr) {
  if (auto it = cache_.find(vaddr); it != cache_.end()) {
    ++counters_.cache_hits;
    return it->second.get();
  }
  ++counters_.cache_misses;
  return translate(vaddr);
}

Fragment* Machine::indirect(std::uint32_t target) {
  ++counters_.indirect_lookups;
  if (Fragment* f = indirect_.find(target)) {
    ++counters_.indirect_hits;
    return f;
  }
  return lookup(target);
}

const Fragment& Machine::translate_fragment(std::uint32_t vaddr) { return *lookup(vaddr); }

const Fragment& Machine::lookup_indirect(std::uint32_t target) { return *indirect(target); }

void Machine::flush_cache() {
  cache_.clear();
  indirect_.clear();
  ++counters_.flushes;
  flush_pending_ = false;
}

// ---- execution ----------------------------------------------------------------

void Machine::trap(TrapKind kind, std::uint32_t vaddr, std::uint32_t pc) {
  status_.state = RunState::kTrapped;
  status_.trap = {kind, vaddr, pc};
  pc_ = pc;
}

inline bool Machine::load32(std::uint32_t addr, std::uint32_t& v, const Op& o, TrapKind as) {
  if (std::uint64_t{addr} + 4 <= limit_ &&
      (perms_[addr / kPageSize] & perms_[(addr + 3) / kPageSize] & kPermR)) {
    v = load_le32(mem_.get() + addr);
    return true;
  }
  const AccessResult r = checked_access(addr, 4, kPermR);
  trap(as == TrapKind::kStackFault ? as : r.kind, r.fault_vaddr, o.pc);
  return false;
}

inline bool Machine::store32(std::uint32_t addr, std::uint32_t v, const Op& o, TrapKind as) {
  if (std::uint64_t{addr} + 4 <= limit_ &&
      (perms_[addr / kPageSize] & perms_[(addr + 3) / kPageSize] & kPermW)) {
    store_le32(mem_.get() + addr, v);
    return true;
  }
  const AccessResult r = checked_access(addr, 4, kPermW);
  trap(as == TrapKind::kStackFault ? as : r.kind, r.fault_vaddr, o.pc);
  return false;
}

inline Machine::Action Machine::step(const Op& o, std::uint32_t& next) {
  auto& r = regs_;
  switch (o.code) {
    case op(Opcode::kMovi): r[o.a] = o.imm; return Action::kNext;
    case op(Opcode::kMov): r[o.a] = r[o.b]; return Action::kNext;
    case op(Opcode::kAdd): r[o.a] += r[o.b]; return Action::kNext;
    case op(Opcode::kSub): r[o.a] -= r[o.b]; return Action::kNext;
    case op(Opcode::kAnd): r[o.a] &= r[o.b]; return Action::kNext;
    case op(Opcode::kOr): r[o.a] |= r[o.b]; return Action::kNext;
    case op(Opcode::kXor): r[o.a] ^= r[o.b]; return Action::kNext;
    case op(Opcode::kShl): r[o.a] <<= (r[o.b] & 31); return Action::kNext;
    case op(Opcode::kShr): r[o.a] >>= (r[o.b] & 31); return Action::kNext;
    case op(Opcode::kSar):
      r[o.a] = static_cast<std::uint32_t>(static_cast<std::int32_t>(r[o.a]) >> (r[o.b] & 31));
      return Action::kNext;
    case op(Opcode::kMul): r[o.a] *= r[o.b]; return Action::kNext;
    case op(Opcode::kDivu):
      if (r[o.b] == 0) {
        trap(TrapKind::kDivideByZero, o.pc, o.pc);
        return Action::kTrap;
      }
      r[o.a] /= r[o.b];
      return Action::kNext;
    case op(Opcode::kRemu):
      if (r[o.b] == 0) {
        trap(TrapKind::kDivideByZero, o.pc, o.pc);
        return Action::kTrap;
      }
      r[o.a] %= r[o.b];
      return Action::kNext;
    case op(Opcode::kAddi): r[o.a] += o.imm; return Action::kNext;
    case op(Opcode::kLdw): {
      std::uint32_t v;
      if (!load32(r[o.b] + o.imm, v, o, TrapKind::kOutOfBounds)) return Action::kTrap;
      r[o.a] = v;
      return Action::kNext;
    }
    case op(Opcode::kLdb): {
      const std::uint32_t addr = r[o.b] + o.imm;
      if (addr < limit_ && (perms_[addr / kPageSize] & kPermR)) {
        r[o.a] = mem_[addr];
        return Action::kNext;
      }
      const AccessResult a = checked_access(addr, 1, kPermR);
      trap(a.kind, a.fault_vaddr, o.pc);
      return Action::kTrap;
    }
    case op(Opcode::kStw):
      return store32(r[o.b] + o.imm, r[o.a], o, TrapKind::kOutOfBounds) ? Action::kNext
                                                                        : Action::kTrap;
    case op(Opcode::kStb): {
      const std::uint32_t addr = r[o.b] + o.imm;
      if (addr < limit_ && (perms_[addr / kPageSize] & kPermW)) {
        mem_[addr] = static_cast<std::uint8_t>(r[o.a]);
        return Action::kNext;
      }
      const AccessResult a = checked_access(addr, 1, kPermW);
      trap(a.kind, a.fault_vaddr, o.pc);
      return Action::kTrap;
    }
    case op(Opcode::kJmp): next = o.imm; return Action::kJump;
    case op(Opcode::kJmpr): next = r[o.b]; return Action::kJump;
    case op(Opcode::kBeq): next = r[o.a] == r[o.b] ? o.imm : o.pc + o.len; return Action::kJump;
    case op(Opcode::kBne): next = r[o.a] != r[o.b] ? o.imm : o.pc + o.len; return Action::kJump;
    case op(Opcode::kBltu): next = r[o.a] < r[o.b] ? o.imm : o.pc + o.len; return Action::kJump;
    case op(Opcode::kBgeu): next = r[o.a] >= r[o.b] ? o.imm : o.pc + o.len; return Action::kJump;
    case op(Opcode::kBlt):
      next = static_cast<std::int32_t>(r[o.a]) < static_cast<std::int32_t>(r[o.b]) ? o.imm
                                                                                  : o.pc + o.len;
      return Action::kJump;
    case op(Opcode::kBge):
      next = static_cast<std::int32_t>(r[o.a]) >= static_cast<std::int32_t>(r[o.b]) ? o.imm
                                                                                   : o.pc + o.len;
      return Action::kJump;
    case op(Opcode::kCall): {
      const std::uint32_t sp = r[isa::kStackReg] - 4;
      if (!store32(sp, o.pc + o.len, o, TrapKind::kStackFault)) return Action::kTrap;
      r[isa::kStackReg] = sp;
      next = o.imm;
      return Action::kJump;
    }
    case op(Opcode::kRet): {
      std::uint32_t target;
      if (!load32(r[isa::kStackReg], target, o, TrapKind::kStackFault)) return Action::kTrap;
      r[isa::kStackReg] += 4;
      next = target;
      return Action::kJump;
    }
    case op(Opcode::kSys): {
      const Action a = syscall(o);
      next = o.pc + o.len;
      return a;
    }
    case kTrapOp:
      trap(static_cast<TrapKind>(o.a), o.imm, o.pc);
      return Action::kTrap;
    default:
      trap(TrapKind::kInvalidInstruction, o.pc, o.pc);
      return Action::kTrap;
  }
}

Machine::Action Machine::syscall(const Op& o) {
  auto& r = regs_;
  switch (o.imm) {
    case kSysExit:
      status_.state = RunState::kExited;
      status_.exit_code = r[0];
      return Action::kStop;

    case kSysDone:
      status_.state = RunState::kStreamDone;
      return Action::kStop;

    case kSysRead: {
      const std::uint32_t fd = r[0], buf = r[1], len = r[2];
      if (fd != 0) {
        r[0] = kErr;
        return Action::kJump;
      }
      const AccessResult a = checked_access(buf, len, kPermW);
      if (!a.ok) {
        trap(a.kind, a.fault_vaddr, o.pc);
        return Action::kTrap;
      }
      const std::uint64_t avail = binding_.input.size() - input_pos_;
      const std::uint32_t n = static_cast<std::uint32_t>(std::min<std::uint64_t>(len, avail));
      if (n) std::memcpy(mem_.get() + buf, binding_.input.data() + input_pos_, n);
      input_pos_ += n;
      counters_.bytes_in += n;
      r[0] = n;
      return Action::kJump;
    }

    case kSysWrite: {
      const std::uint32_t fd = r[0], buf = r[1], len = r[2];
      if (fd != 1 && fd != 2) {
        r[0] = kErr;
        return Action::kJump;
      }
      const AccessResult a = checked_access(buf, len, kPermR);
      if (!a.ok) {
        trap(a.kind, a.fault_vaddr, o.pc);
        return Action::kTrap;
      }
      const std::uint8_t* src = mem_.get() + buf;
      if (fd == 1) {
        const std::uint64_t have = binding_.output ? binding_.output->size() : counters_.bytes_out;
        if (have + len > binding_.output_limit) {
          output_overflow_ = true;
          r[0] = kErr;
          return Action::kJump;
        }
        if (binding_.output) binding_.output->insert(binding_.output->end(), src, src + len);
        counters_.bytes_out += len;
      } else {
        if (binding_.verbose && binding_.diagnostics)
          binding_.diagnostics->insert(binding_.diagnostics->end(), src, src + len);
        counters_.bytes_diag += len;
      }
      r[0] = len;
      return Action::kJump;
    }

    case kSysSetperm: {
      const std::uint32_t addr = r[0], len = r[1], perm = r[2];
      const std::uint64_t guard_start = limit_ - kStackSize - kPageSize;
      const bool bad = addr % kPageSize != 0 || len % kPageSize != 0 ||
                       (perm & ~std::uint32_t{kPermR | kPermW | kPermX}) != 0 ||
                       ((perm & kPermW) && (perm & kPermX)) || addr >= limit_ ||
                       std::uint64_t{addr} + len > guard_start;
      if (bad) {
        r[0] = kErr;
        return Action::kJump;
      }
      for (std::uint64_t p = addr / kPageSize; p < (std::uint64_t{addr} + len) / kPageSize; ++p) {
        const std::uint8_t old = perms_[p];
        if (old == 0 && perm != 0) std::memset(mem_.get() + p * kPageSize, 0, kPageSize);
        if ((old ^ perm) & kPermX) flush_pending_ = true;
        perms_[p] = static_cast<std::uint8_t>(perm);
      }
      r[0] = 0;
      return Action::kJump;
    }

    default:
      trap(TrapKind::kBadSyscall, o.pc, o.pc);
      return Action::kTrap;
  }
}

void Machine::run_cached() {
  if (flush_pending_) flush_cache();
  Fragment* f = lookup(pc_);
  while (true) {
    const Op* ops = f->ops.data();
    const std::size_t n = f->ops.size();
    const std::size_t limit = static_cast<std::size_t>(std::min<std::uint64_t>(n, fuel_));
    std::uint32_t next = 0;
    std::size_t i = 0;
    Action act = Action::kNext;
    for (; i < limit; ++i) {
      act = step(ops[i], next);
      if (act != Action::kNext) break;
    }

    if (act == Action::kTrap) {
      instret_ += i;
      fuel_ -= i;
      return;
    }
    if (act == Action::kNext) {
      if (limit < n) {
        instret_ += limit;
        fuel_ -= limit;
        trap(TrapKind::kFuelExhausted, ops[limit].pc, ops[limit].pc);
        return;
      }
      instret_ += n;
      fuel_ -= n;
      next = f->fall_target;
    } else {
      instret_ += i + 1;
      fuel_ -= i + 1;
    }
    pc_ = next;
    if (act == Action::kStop) return;

    if (flush_pending_) {
      flush_cache();
      f = lookup(pc_);
      continue;
    }
    if (!config_.link_fragments) {
      f = f->exit == ExitKind::kIndirect ? indirect(pc_) : lookup(pc_);
      continue;
    }
    Fragment** link = nullptr;
    switch (f->exit) {
      case ExitKind::kDirect:
        link = &f->taken_link;
        break;
      case ExitKind::kConditional:
        link = pc_ == f->taken_target ? &f->taken_link : &f->fall_link;
        break;
      case ExitKind::kSyscall:
      case ExitKind::kFallthrough:
        link = &f->fall_link;
        break;
      case ExitKind::kIndirect:
      case ExitKind::kTrap:
        break;
    }
    if (link) {
      if (!*link) {
        *link = lookup(pc_);
        ++counters_.links_patched;
      }
      f = *link;
    } else {
      f = indirect(pc_);
    }
  }
}

void Machine::run_uncached() {
  while (true) {
    if (fuel_ == 0) {
      trap(TrapKind::kFuelExhausted, pc_, pc_);
      return;
    }
    const Op o = decode_op(pc_);
    std::uint32_t next = 0;
    const Action act = step(o, next);
    if (act == Action::kTrap) return;
    ++instret_;
    --fuel_;
    pc_ = act == Action::kNext ? pc_ + o.len : next;
    if (act == Action::kStop) return;
    flush_pending_ = false;
  }
}

const Status& Machine::run() {
  if (status_.state != RunState::kRunning)
    throw std::logic_error("machine is not runnable: " + describe(status_));
  if (config_.use_cache)
    run_cached();
  else
    run_uncached();
  return status_;
}

void Machine::rebind(SyscallBinding binding) {
  if (status_.state != RunState::kStreamDone)
    throw std::logic_error("rebind requires a machine stopped at done: " + describe(status_));
  binding_ = binding;
  input_pos_ = 0;
  fuel_ = config_.fuel;
  output_overflow_ = false;
  status_ = Status{};
}

}  // namespace vxa::vm
