#include "decode.hpp"

#include <chrono>

#include "vxa/codecs/vxflate.hpp"
#include "vxa/container/crc32.hpp"

#ifndef VXAR_BASELINE
#include "vxa/codecs/registry.hpp"
#endif

namespace vxar {

using vxa::Bytes;
using vxa::ByteView;
using vxa::container::ArchiveError;
using vxa::container::Entry;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

DecodeResult failed(Failure f, std::string msg) {
  DecodeResult r;
  r.failure = f;
  r.message = std::move(msg);
  return r;
}

void verify_output(const Entry& entry, DecodeResult& r) {
  if (!r.ok()) return;
  const auto& h = entry.header;
  if (r.data.size() != h.uncompressed_size) {
    r.failure = Failure::kSizeMismatch;
    r.message = "decoded " + std::to_string(r.data.size()) + " bytes, expected " +
                std::to_string(h.uncompressed_size);
  } else if (vxa::container::crc32(r.data) != h.crc32) {
    r.failure = Failure::kCrcMismatch;
    r.message = "CRC-32 mismatch on decoded data";
  }
}

}  // namespace

const char* to_string(Failure f) {
  switch (f) {
    case Failure::kNone: return "ok";
    case Failure::kCorruptEntry: return "corrupt-entry";
    case Failure::kCrcMismatch: return "crc-mismatch";
    case Failure::kSizeMismatch: return "size-mismatch";
    case Failure::kDecoderInvalid: return "decoder-invalid";
    case Failure::kDecoderFailed: return "decoder-failed";
    case Failure::kTrap: return "trap";
    case Failure::kUnsupported: return "unsupported";
  }
  return "?";
}

int exit_code_for(Failure f) {
  if (f == Failure::kNone) return kExitOk;
  return f == Failure::kCorruptEntry ? kExitCorrupt : kExitIntegrity;
}

EntryDecoder::EntryDecoder(const vxa::container::Archive& archive, VmOptions vm, bool reuse_vm)
    : archive_(archive), vm_(vm), reuse_vm_(reuse_vm) {}

EntryDecoder::~EntryDecoder() = default;

DecodeResult EntryDecoder::extract(const Entry& entry, bool decode_all, bool allow_native) {
  return decode(entry, decode_all, allow_native);
}

DecodeResult EntryDecoder::test(const Entry& entry) {
#ifdef VXAR_BASELINE
  return decode(entry, false, false);
#else
  return decode(entry, true, false);
#endif
}

DecodeResult EntryDecoder::decode(const Entry& entry, bool decode_all, bool allow_native) {
  const auto& h = entry.header;
  ByteView stream;
  try {
    archive_.verify_entry_headers(entry);
    stream = archive_.read_entry_stream(entry);
  } catch (const ArchiveError& e) {
    return failed(Failure::kCorruptEntry, e.what());
  }
  const auto ext = h.vxa();
  (void)allow_native;

  if (h.method == vxa::container::kMethodStore) {
    if (h.compressed_size != h.uncompressed_size)
      return failed(Failure::kCorruptEntry, "stored entry with differing sizes");
    if (vxa::container::crc32(stream) != h.crc32)
      return failed(Failure::kCrcMismatch, "CRC-32 mismatch on stored data");
    if (!decode_all || !ext) {
      DecodeResult r;
      r.data.assign(stream.begin(), stream.end());
      return r;
    }
#ifdef VXAR_BASELINE
    return failed(Failure::kUnsupported, "decoding needs the VXA virtual machine");
#else
    // No size or CRC is recorded for the decoded form; the decoder must
    // simply succeed.
    return run_decoder(entry, stream, UINT64_MAX, vm_.use_cache);
#endif
  }

  DecodeResult r;
#ifndef VXAR_BASELINE
  const bool native_ok = h.method == vxa::container::kMethodVxflate ||
                         h.method == vxa::container::kMethodRle;
  if (allow_native && native_ok) {
    r = *run_native(entry, stream);
  } else if (ext) {
    r = run_decoder(entry, stream, h.uncompressed_size, vm_.use_cache);
  } else
#endif
  if (h.method == vxa::container::kMethodVxflate) {
    // Entry without an attached decoder: the reader's built-in decompressor.
    const auto t0 = Clock::now();
    try {
      r.data = vxa::codecs::decode_vxflate_host(stream, h.uncompressed_size);
      r.used_native = true;
    } catch (const vxa::codecs::CorruptStream& e) {
      r = failed(Failure::kDecoderFailed, e.what());
    }
    r.seconds = seconds_since(t0);
  } else {
    return failed(Failure::kUnsupported,
                  "method " + vxa::container::method_name(h.method) +
#ifdef VXAR_BASELINE
                      " needs the VXA virtual machine"
#else
                      " has no decoder"
#endif
    );
  }
  verify_output(entry, r);
  return r;
}

#ifndef VXAR_BASELINE

DecodeResult EntryDecoder::run_decoder(const Entry& entry, ByteView stream,
                                       std::uint64_t output_limit, bool use_cache) {
  namespace vm = vxa::vm;
  const auto ext = entry.header.vxa();
  if (!ext) return failed(Failure::kDecoderInvalid, "entry has no decoder attached");
  const std::uint64_t off = ext->decoder_offset;

  auto img = images_.find(off);
  if (img == images_.end()) {
    try {
      auto bytes = archive_.locate_decoder(entry);
      img = images_.emplace(off, vxa::isa::validate_image(*bytes)).first;
    } catch (const ArchiveError& e) {
      return failed(Failure::kDecoderInvalid, e.what());
    } catch (const vxa::isa::ImageError& e) {
      return failed(Failure::kDecoderInvalid, e.what());
    }
  }

  DecodeResult r;
  r.used_vm = true;
  Bytes diag;
  vm::SyscallBinding binding{stream, &r.data, &diag, vm_.verbose, output_limit};
  // Reused machines are kept only between streams that ended with done.
  const bool pool = reuse_vm_ && use_cache == vm_.use_cache;
  std::unique_ptr<vm::Machine> local;
  vm::Machine* m = nullptr;
  auto pooled = machines_.find(off);
  if (pool && pooled != machines_.end()) {
    m = pooled->second.get();
    m->rebind(binding);
  } else {
    vm::MachineConfig cfg;
    cfg.mem_limit = vm_.mem_limit;
    cfg.fuel = vm_.fuel;
    cfg.use_cache = use_cache;
    try {
      local = std::make_unique<vm::Machine>(img->second, cfg, binding);
    } catch (const std::exception& e) {
      return failed(Failure::kDecoderInvalid, e.what());
    }
    m = local.get();
  }

  const std::uint64_t instret0 = m->instret();
  const auto t0 = Clock::now();
  const vm::Status& st = m->run();
  r.seconds = seconds_since(t0);
  r.instret = m->instret() - instret0;
  r.counters = m->counters();
  r.diagnostics = vxa::to_string(diag);

  if (st.state == vm::RunState::kTrapped) {
    r.failure = Failure::kTrap;
    r.trap = st.trap;
    r.message = vm::describe(st);
  } else if (st.state == vm::RunState::kExited && st.exit_code != 0) {
    r.failure = Failure::kDecoderFailed;
    r.message = "decoder exited with status " + std::to_string(st.exit_code);
  } else if (m->output_overflowed()) {
    r.failure = Failure::kSizeMismatch;
    r.message = "decoder output exceeds " + std::to_string(output_limit) + " bytes";
  }
  if (pool) {
    if (st.state != vm::RunState::kStreamDone) machines_.erase(off);
    else if (local) machines_[off] = std::move(local);
  }
  return r;
}

std::optional<DecodeResult> EntryDecoder::run_native(const Entry& entry, ByteView stream) {
  const auto ext = entry.header.vxa();
  const auto& registry = vxa::codecs::Registry::builtin();
  const vxa::codecs::CodecDescriptor* codec = ext ? registry.find_by_tag(ext->codec_name) : nullptr;
  if (!codec && entry.header.method == vxa::container::kMethodVxflate) codec = registry.find("vxflate");
  if (!codec && entry.header.method == vxa::container::kMethodRle) codec = registry.find("rle");
  if (!codec || !codec->host_decode) return std::nullopt;
  DecodeResult r;
  r.used_native = true;
  const auto t0 = Clock::now();
  try {
    r.data = codec->host_decode(stream, entry.header.uncompressed_size);
  } catch (const std::exception& e) {
    r.failure = Failure::kDecoderFailed;
    r.message = e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

#endif

}  // namespace vxar
