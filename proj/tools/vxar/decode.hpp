#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "commands.hpp"
#include "vxa/bytes.hpp"
#include "vxa/container/archive.hpp"

#ifndef VXAR_BASELINE
#include "vxa/isa/image.hpp"
#include "vxa/vm/machine.hpp"
#endif

namespace vxar {

enum class Failure {
  kNone,
  kCorruptEntry,     // header mismatch, truncated payload, bad local header
  kCrcMismatch,
  kSizeMismatch,
  kDecoderInvalid,   // decoder pseudo-file missing, corrupt or not a valid image
  kDecoderFailed,    // decoder exited nonzero or a host decoder rejected the stream
  kTrap,
  kUnsupported,
};

const char* to_string(Failure f);
// kCorruptEntry maps to kExitCorrupt, every other failure to kExitIntegrity.
int exit_code_for(Failure f);

struct DecodeResult {
  Failure failure = Failure::kNone;
  std::string message;
  vxa::Bytes data;
  std::string diagnostics;  // guest fd 2 output, verbose mode only
  bool used_vm = false;
  bool used_native = false;
  std::uint64_t instret = 0;
  double seconds = 0;
#ifndef VXAR_BASELINE
  std::optional<vxa::vm::TrapReason> trap;
  vxa::vm::Counters counters;
#endif

  bool ok() const { return failure == Failure::kNone; }
};

// Decodes entries of one archive. Not thread-safe; use one per thread.
class EntryDecoder {
 public:
  EntryDecoder(const vxa::container::Archive& archive, VmOptions vm, bool reuse_vm);
  ~EntryDecoder();

  // Extraction semantics: method-0 payloads are returned as stored unless
  // decode_all; allow_native lets methods 8 and 9 bypass the VM.
  DecodeResult extract(const vxa::container::Entry& entry, bool decode_all, bool allow_native);

  // Integrity test: every entry with a decoder runs it in the VM.
  DecodeResult test(const vxa::container::Entry& entry);

#ifndef VXAR_BASELINE
  // Runs the entry's archived decoder over `stream`.
  DecodeResult run_decoder(const vxa::container::Entry& entry, vxa::ByteView stream,
                           std::uint64_t output_limit, bool use_cache);
  // Host decoder for methods 8/9 and vxsf payloads; nullopt when none exists.
  std::optional<DecodeResult> run_native(const vxa::container::Entry& entry, vxa::ByteView stream);
#endif

 private:
  DecodeResult decode(const vxa::container::Entry& entry, bool decode_all, bool allow_native);

  const vxa::container::Archive& archive_;
  VmOptions vm_;
  bool reuse_vm_;
#ifndef VXAR_BASELINE
  std::map<std::uint64_t, vxa::isa::ExecutableImage> images_;
  std::map<std::uint64_t, std::unique_ptr<vxa::vm::Machine>> machines_;
#endif
};

}  // namespace vxar
