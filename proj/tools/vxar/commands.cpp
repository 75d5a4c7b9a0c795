#include "commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "decode.hpp"
#include "json.hpp"
#include "vxa/container/archive.hpp"
#include "vxa/container/crc32.hpp"

#ifndef VXAR_BASELINE
#include "vxa/codecs/pcm1.hpp"
#include "vxa/codecs/registry.hpp"
#include "vxa/codecs/vxsf.hpp"
#include "vxa/isa/assembler.hpp"
#include "vxa/isa/image.hpp"
#include "vxa/vm/machine.hpp"
#endif

namespace vxar {

namespace fs = std::filesystem;
using json = nlohmann::json;
// Entry names come from untrusted archives and need not be valid UTF-8.
constexpr auto kReplaceInvalid = json::error_handler_t::replace;
using vxa::Bytes;
using vxa::ByteView;
using vxa::container::Archive;
using vxa::container::ArchiveError;
using vxa::container::Entry;

namespace {

[[maybe_unused]] Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, ByteView data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08" PRIx32, v);
  return buf;
}

std::optional<Archive> open_archive(const fs::path& path, Io io, int& code) {
  try {
    return Archive::open(path);
  } catch (const ArchiveError& e) {
    io.err << "vxar: " << path.string() << ": " << e.what() << "\n";
    code = e.kind() == vxa::container::ArchiveErrorKind::kIo ? kExitUsage : kExitCorrupt;
    return std::nullopt;
  }
}

std::string codec_of(const Entry& e) {
  auto ext = e.header.vxa();
  return ext ? vxa::container::codec_name_string(ext->codec_name) : "";
}

int worst(int a, int b) {
  if (a == kExitCorrupt || b == kExitCorrupt) return kExitCorrupt;
  return std::max(a, b);
}

}  // namespace

std::optional<fs::path> safe_entry_path(const std::string& name) {
  if (name.empty() || name.front() == '/' || name.find('\\') != std::string::npos ||
      name.find('\0') != std::string::npos)
    return std::nullopt;
  fs::path out;
  std::stringstream ss(name);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (part.empty() || part == "." || part == "..") return std::nullopt;
    out /= part;
  }
  if (name.back() == '/') return std::nullopt;
  return out;
}

// ---- list ----------------------------------------------------------------

int cmd_list(const ListOptions& opt, Io io) {
  int code = kExitOk;
  auto archive = open_archive(opt.archive, io, code);
  if (!archive) return code;

  std::vector<Entry> rows;
  try {
    rows = opt.show_pseudo ? archive->scan_local_entries() : archive->entries();
  } catch (const ArchiveError& e) {
    io.err << "vxar: " << e.what() << "\n";
    return kExitCorrupt;
  }

  if (opt.json) {
    json arr = json::array();
    for (const auto& e : rows) {
      const auto& h = e.header;
      json j = {{"name", h.name},
                {"method", h.method},
                {"method_name", vxa::container::method_name(h.method)},
                {"compressed_size", h.compressed_size},
                {"uncompressed_size", h.uncompressed_size},
                {"crc32", hex32(h.crc32)},
                {"codec", codec_of(e)},
                {"pseudo", h.is_pseudo()},
                {"offset", e.local_header_offset}};
      if (auto ext = h.vxa()) j["decoder_offset"] = ext->decoder_offset;
      arr.push_back(std::move(j));
    }
    io.out << json{{"archive", opt.archive.string()}, {"entries", arr}}.dump(2, ' ', false, kReplaceInvalid) << "\n";
    return kExitOk;
  }

  char line[256];
  std::snprintf(line, sizeof line, "%-8s %12s %12s %-8s %-8s %s\n", "method", "compressed",
                "size", "crc32", "codec", "name");
  io.out << line;
  for (const auto& e : rows) {
    const auto& h = e.header;
    std::snprintf(line, sizeof line, "%-8s %12" PRIu64 " %12" PRIu64 " %-8s %-8s ",
                  vxa::container::method_name(h.method).c_str(), h.compressed_size,
                  h.uncompressed_size, hex32(h.crc32).c_str(), codec_of(e).c_str());
    io.out << line << (h.is_pseudo() ? "[decoder @" + std::to_string(e.local_header_offset) + "]" : h.name)
           << "\n";
  }
  return kExitOk;
}

// ---- extract -------------------------------------------------------------

int cmd_extract(const ExtractOptions& opt, Io io) {
  int code = kExitOk;
  auto archive = open_archive(opt.archive, io, code);
  if (!archive) return code;

  std::vector<const Entry*> todo;
  if (opt.names.empty()) {
    for (const auto& e : archive->entries()) todo.push_back(&e);
  } else {
    for (const auto& n : opt.names) {
      auto it = std::find_if(archive->entries().begin(), archive->entries().end(),
                             [&](const Entry& e) { return e.name() == n; });
      if (it == archive->entries().end()) {
        io.err << "vxar: " << n << ": not in archive\n";
        code = worst(code, kExitUsage);
      } else {
        todo.push_back(&*it);
      }
    }
  }

  EntryDecoder decoder(*archive, opt.vm, opt.reuse_vm);
  for (const Entry* e : todo) {
    auto rel = safe_entry_path(e->name());
    if (!rel) {
      io.err << "vxar: " << e->name() << ": unsafe entry name, skipped\n";
      code = worst(code, kExitIntegrity);
      continue;
    }
    DecodeResult r = decoder.extract(*e, opt.decode_all, opt.allow_native);
    if (opt.vm.verbose && !r.diagnostics.empty()) io.err << r.diagnostics;
    if (!r.ok()) {
      io.err << "vxar: " << e->name() << ": " << to_string(r.failure) << ": " << r.message << "\n";
      code = worst(code, exit_code_for(r.failure));
      continue;
    }
    const fs::path dest = opt.output_dir / *rel;
    try {
      fs::create_directories(dest.parent_path());
      write_file(dest, r.data);
    } catch (const std::exception& ex) {
      io.err << "vxar: " << ex.what() << "\n";
      code = worst(code, kExitIntegrity);
      continue;
    }
    if (opt.vm.verbose) {
      io.err << "extracted " << e->name() << " (" << r.data.size() << " bytes"
             << (r.used_vm ? ", vm" : r.used_native ? ", native" : ", stored") << ")\n";
    }
  }
  return code;
}

// ---- test ----------------------------------------------------------------

int cmd_test(const TestOptions& opt, Io io) {
  int code = kExitOk;
  auto archive = open_archive(opt.archive, io, code);
  if (!archive) {
    if (opt.json) io.out << json{{"archive", opt.archive.string()}, {"error", "corrupt archive"}}.dump(2, ' ', false, kReplaceInvalid) << "\n";
    return code;
  }

  EntryDecoder decoder(*archive, opt.vm, false);
  json arr = json::array();
  std::size_t failures = 0;
  for (const auto& e : archive->entries()) {
    DecodeResult r = decoder.test(e);
    if (opt.vm.verbose && !r.diagnostics.empty()) io.err << r.diagnostics;
    if (!r.ok()) {
      ++failures;
      code = worst(code, exit_code_for(r.failure));
    }
    if (opt.json) {
      arr.push_back({{"name", e.name()},
                     {"ok", r.ok()},
                     {"class", to_string(r.failure)},
                     {"message", r.message},
                     {"vm", r.used_vm},
                     {"instret", r.instret}});
    } else if (r.ok()) {
      io.out << "OK    " << e.name() << "\n";
    } else {
      io.out << "FAIL  " << e.name() << ": " << to_string(r.failure) << ": " << r.message << "\n";
    }
  }
  if (opt.json) {
    io.out << json{{"archive", opt.archive.string()},
                   {"entries", arr},
                   {"failures", failures},
                   {"exit_code", code}}
                  .dump(2, ' ', false, kReplaceInvalid)
           << "\n";
  } else {
    io.out << archive->entries().size() << " entries, " << failures << " failed\n";
  }
  return code;
}

#ifndef VXAR_BASELINE

namespace {

struct GuestRun {
  vxa::vm::Status status;
  Bytes output;
  Bytes diagnostics;
  bool overflowed = false;
};

GuestRun run_guest(ByteView image_bytes, ByteView input, std::uint64_t output_limit,
                   const VmOptions& vm) {
  GuestRun g;
  vxa::vm::MachineConfig cfg;
  cfg.fuel = vm.fuel;
  cfg.mem_limit = vm.mem_limit;
  cfg.use_cache = vm.use_cache;
  vxa::vm::Machine m(vxa::isa::validate_image(image_bytes), cfg,
                     {input, &g.output, &g.diagnostics, vm.verbose, output_limit});
  g.status = m.run();
  g.overflowed = m.output_overflowed();
  return g;
}

bool guest_succeeded(const GuestRun& g) {
  using vxa::vm::RunState;
  return !g.overflowed && (g.status.state == RunState::kStreamDone ||
                           (g.status.state == RunState::kExited && g.status.exit_code == 0));
}

struct InputFile {
  fs::path path;
  std::string name;
};

std::vector<InputFile> collect_inputs(const AddOptions& opt, Io io, bool& ok) {
  std::vector<InputFile> files;
  for (const auto& in : opt.inputs) {
    const fs::path rel = fs::path(in).lexically_normal();
    const fs::path full = opt.base_dir.empty() ? rel : opt.base_dir / rel;
    std::error_code ec;
    if (fs::is_directory(full, ec)) {
      std::vector<fs::path> found;
      for (auto it = fs::recursive_directory_iterator(full, ec); !ec && it != fs::end(it);
           it.increment(ec))
        if (it->is_regular_file()) found.push_back(it->path());
      std::sort(found.begin(), found.end());
      for (const auto& f : found)
        files.push_back({f, (rel / f.lexically_relative(full)).lexically_normal().generic_string()});
    } else if (fs::is_regular_file(full, ec)) {
      files.push_back({full, rel.generic_string()});
    } else {
      io.err << "vxar: " << full.string() << ": not a readable file\n";
      ok = false;
    }
  }
  for (auto& f : files) {
    while (!f.name.empty() && f.name.front() == '/') f.name.erase(0, 1);
  }
  return files;
}

}  // namespace

int cmd_add(const AddOptions& opt, Io io) {
  namespace codecs = vxa::codecs;
  using vxa::container::ArchiveWriter;
  const auto& registry = codecs::Registry::builtin();

  const codecs::CodecDescriptor* forced = nullptr;
  if (opt.codec) {
    forced = registry.find(*opt.codec);
    if (!forced) {
      io.err << "vxar: unknown codec '" << *opt.codec << "'\n";
      return kExitUsage;
    }
  }
  const codecs::CodecDescriptor* fallback = registry.find("vxflate");

  bool inputs_ok = true;
  const auto files = collect_inputs(opt, io, inputs_ok);
  int code = inputs_ok ? kExitOk : kExitUsage;

  const fs::path tmp = opt.archive.string() + ".partial";
  std::size_t added = 0;
  std::uint64_t archive_size = 0;
  try {
    ArchiveWriter writer(tmp);
    std::set<std::string> names;
    for (const auto& f : files) {
      if (!safe_entry_path(f.name)) {
        io.err << "vxar: " << f.name << ": unsafe entry name, skipped\n";
        code = worst(code, kExitUsage);
        continue;
      }
      if (!names.insert(f.name).second) {
        io.err << "vxar: " << f.name << ": duplicate entry name, skipped\n";
        code = worst(code, kExitUsage);
        continue;
      }
      Bytes data;
      try {
        data = read_file(f.path);
      } catch (const std::exception& e) {
        io.err << "vxar: " << e.what() << "\n";
        code = worst(code, kExitUsage);
        continue;
      }

      const codecs::CodecDescriptor* codec = forced;
      codecs::Disposition disp = codecs::Disposition::kCompress;
      if (!codec) {
        auto rec = registry.recognize(data, f.name);
        codec = rec.codec ? rec.codec : fallback;
        disp = rec.codec ? rec.disposition : codecs::Disposition::kCompress;
      } else if (codec->kind == codecs::CodecKind::kRedec) {
        disp = codecs::Disposition::kStorePrecompressed;
      }

      Bytes payload;
      std::string note;
      if (disp == codecs::Disposition::kStorePrecompressed) {
        GuestRun g = run_guest(codec->decoder_image(), data, UINT64_MAX, opt.vm);
        if (!guest_succeeded(g)) {
          note = codec->name + " decoder rejects this file (" + vxa::vm::describe(g.status) +
                 "), compressing instead";
          codec = fallback;
          disp = codecs::Disposition::kCompress;
        }
      }
      if (disp == codecs::Disposition::kCompress) {
        try {
          payload = codec->encode(data);
        } catch (const codecs::NotRecognized& e) {
          note = std::string(e.what()) + ", using vxflate";
          codec = fallback;
          payload = codec->encode(data);
        }
        if (!forced && payload.size() >= data.size()) {
          disp = codecs::Disposition::kStorePlain;
          payload.clear();
        }
      }

      std::uint64_t written = 0;
      if (disp == codecs::Disposition::kStorePlain) {
        written = writer.write_entry(f.name, vxa::container::kMethodStore, data, data);
      } else if (disp == codecs::Disposition::kStorePrecompressed) {
        const auto dec = writer.write_decoder_pseudofile(codec->decoder_image());
        written = writer.write_entry(f.name, vxa::container::kMethodStore, data, data,
                                     vxa::container::VxaExtension{dec, codec->tag});
      } else {
        // Decode with the guest decoder before committing the entry.
        GuestRun g = run_guest(codec->decoder_image(), payload, data.size(), opt.vm);
        if (!guest_succeeded(g) || g.output != data) {
          io.err << "vxar: " << f.name << ": write-time verification failed for codec "
                 << codec->name << " (" << vxa::vm::describe(g.status) << ", "
                 << g.output.size() << " of " << data.size() << " bytes"
                 << (g.output == data ? "" : ", output differs") << "); file not added\n";
          code = worst(code, kExitIntegrity);
          continue;
        }
        const auto dec = writer.write_decoder_pseudofile(codec->decoder_image());
        written = writer.write_entry(f.name, codec->method, data, payload,
                                     vxa::container::VxaExtension{dec, codec->tag});
      }
      ++added;
      if (!note.empty()) io.err << "vxar: " << f.name << ": " << note << "\n";
      if (opt.vm.verbose) {
        io.err << "added " << f.name << " @" << written << " ("
               << (disp == codecs::Disposition::kStorePlain ? "stored" : codec->name) << ", "
               << codecs::to_string(disp) << ", " << data.size() << " -> "
               << (disp == codecs::Disposition::kCompress ? payload.size() : data.size())
               << " bytes)\n";
      }
    }
    archive_size = writer.finalize();
    io.out << "added " << added << " file(s), " << writer.pseudo_file_count()
           << " decoder(s), " << archive_size << " bytes\n";
  } catch (const std::exception& e) {
    io.err << "vxar: " << e.what() << "\n";
    std::error_code ec;
    fs::remove(tmp, ec);
    return kExitUsage;
  }
  std::error_code ec;
  fs::rename(tmp, opt.archive, ec);
  if (ec) {
    io.err << "vxar: cannot create " << opt.archive.string() << ": " << ec.message() << "\n";
    return kExitUsage;
  }
  return code;
}

// ---- bench ---------------------------------------------------------------

int cmd_bench(const BenchOptions& opt, Io io) {
  int code = kExitOk;
  auto archive = open_archive(opt.archive, io, code);
  if (!archive) return code;
  const int reps = std::max(1, opt.repetitions);

  EntryDecoder decoder(*archive, opt.vm, false);
  json entries = json::array();
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  for (const auto& e : archive->entries()) {
    if (!e.header.vxa()) continue;
    ByteView stream;
    try {
      archive->verify_entry_headers(e);
      stream = archive->read_entry_stream(e);
    } catch (const ArchiveError& ex) {
      io.err << "vxar: " << e.name() << ": " << ex.what() << "\n";
      code = worst(code, kExitCorrupt);
      continue;
    }
    const std::uint64_t limit =
        e.header.method == vxa::container::kMethodStore ? UINT64_MAX : e.header.uncompressed_size;

    std::vector<double> vm_times;
    std::uint64_t instret = 0;
    std::uint32_t out_crc = 0;
    std::uint64_t out_size = 0;
    bool deterministic = true;
    bool failed = false;
    for (int i = 0; i < reps; ++i) {
      DecodeResult r = decoder.run_decoder(e, stream, limit, true);
      if (!r.ok()) {
        io.err << "vxar: " << e.name() << ": " << to_string(r.failure) << ": " << r.message << "\n";
        failed = true;
        break;
      }
      const std::uint32_t c = vxa::container::crc32(r.data);
      if (i == 0) {
        instret = r.instret;
        out_crc = c;
        out_size = r.data.size();
      } else if (r.instret != instret || c != out_crc) {
        deterministic = false;
      }
      vm_times.push_back(r.seconds);
    }
    if (failed) {
      code = worst(code, kExitIntegrity);
      continue;
    }
    DecodeResult nc = decoder.run_decoder(e, stream, limit, false);
    const bool nocache_same = nc.ok() && nc.instret == instret && vxa::container::crc32(nc.data) == out_crc;

    std::vector<double> native_times;
    for (int i = 0; i < reps; ++i) {
      auto n = decoder.run_native(e, stream);
      if (!n || !n->ok()) break;
      native_times.push_back(n->seconds);
    }

    const double vm_s = median(vm_times);
    json j = {{"name", e.name()},
              {"codec", codec_of(e)},
              {"method", vxa::container::method_name(e.header.method)},
              {"stored_size", e.header.compressed_size},
              {"decoded_size", out_size},
              {"instret", instret},
              {"vm_seconds", vm_s},
              {"nocache_seconds", nc.seconds},
              {"cache_speedup", vm_s > 0 ? nc.seconds / vm_s : 0.0},
              {"deterministic", deterministic && nocache_same}};
    if (!native_times.empty()) {
      const double nat = median(native_times);
      j["native_seconds"] = nat;
      j["vm_native_ratio"] = nat > 0 ? vm_s / nat : 0.0;
    }
    if (!(deterministic && nocache_same)) code = worst(code, kExitIntegrity);
    entries.push_back(std::move(j));
  }

  // Decoder pseudo-files and their share of the archive.
  json decoders = json::array();
  std::uint64_t overhead = 0;
  try {
    for (const auto& p : archive->scan_local_entries()) {
      if (!p.header.is_pseudo()) continue;
      std::uint64_t payload_off = 0;
      archive->read_local_header(p.local_header_offset, &payload_off);
      const std::uint64_t footprint = payload_off - p.local_header_offset + p.header.compressed_size;
      overhead += footprint;
      decoders.push_back({{"offset", p.local_header_offset},
                          {"raw_size", p.header.uncompressed_size},
                          {"compressed_size", p.header.compressed_size},
                          {"footprint", footprint}});
    }
  } catch (const ArchiveError& ex) {
    io.err << "vxar: " << ex.what() << "\n";
    code = worst(code, kExitCorrupt);
  }
  const double pct = archive->size() ? 100.0 * static_cast<double>(overhead) / static_cast<double>(archive->size()) : 0.0;

  json report = {{"archive", opt.archive.string()},
                 {"archive_size", archive->size()},
                 {"entry_count", archive->entries().size()},
                 {"repetitions", reps},
                 {"entries", entries},
                 {"decoders", decoders},
                 {"decoder_overhead_bytes", overhead},
                 {"decoder_overhead_percent", pct}};
  if (opt.json) {
    io.out << report.dump(2, ' ', false, kReplaceInvalid) << "\n";
    return code;
  }

  char line[512];
  std::snprintf(line, sizeof line, "%-24s %-8s %12s %10s %10s %8s %10s %8s %s\n", "name", "codec",
                "instret", "vm ms", "nocache ms", "speedup", "native ms", "vm/nat", "determinism");
  io.out << line;
  for (const auto& j : entries) {
    const bool has_native = j.contains("native_seconds");
    std::snprintf(line, sizeof line, "%-24s %-8s %12" PRIu64 " %10.3f %10.3f %8.2f %10s %8s %s\n",
                  j["name"].get<std::string>().substr(0, 24).c_str(),
                  j["codec"].get<std::string>().c_str(), j["instret"].get<std::uint64_t>(),
                  1e3 * j["vm_seconds"].get<double>(), 1e3 * j["nocache_seconds"].get<double>(),
                  j["cache_speedup"].get<double>(),
                  has_native ? std::to_string(1e3 * j["native_seconds"].get<double>()).substr(0, 8).c_str() : "-",
                  has_native ? std::to_string(j["vm_native_ratio"].get<double>()).substr(0, 6).c_str() : "-",
                  j["deterministic"].get<bool>() ? "OK" : "MISMATCH");
    io.out << line;
  }
  for (const auto& d : decoders) {
    io.out << "decoder @" << d["offset"].get<std::uint64_t>() << ": "
           << d["raw_size"].get<std::uint64_t>() << " bytes raw, "
           << d["compressed_size"].get<std::uint64_t>() << " compressed\n";
  }
  std::snprintf(line, sizeof line, "decoder overhead: %" PRIu64 " of %" PRIu64 " bytes (%.3f%%)\n",
                overhead, static_cast<std::uint64_t>(archive->size()), pct);
  io.out << line;
  return code;
}

// ---- asm / run -----------------------------------------------------------

int cmd_asm(const fs::path& source, const fs::path& out, Io io) {
  std::string text;
  try {
    text = vxa::to_string(read_file(source));
  } catch (const std::exception& e) {
    io.err << "vxar: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    auto unit = vxa::isa::assemble_unit(text);
    Bytes image = vxa::isa::serialize_image(unit.image);
    write_file(out, image);
    io.out << out.string() << ": " << image.size() << " bytes (text " << unit.text_size
           << ", data " << unit.data_size << ")\n";
  } catch (const vxa::isa::AsmError& e) {
    io.err << source.string() << ":" << e.line() << ": "
           << std::string(e.what()).substr(std::string(e.what()).find(": ") + 2) << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    io.err << "vxar: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_run(const RunOptions& opt, Io io) {
  Bytes image_bytes;
  try {
    image_bytes = read_file(opt.image);
  } catch (const std::exception& e) {
    io.err << "vxar: " << e.what() << "\n";
    return kExitUsage;
  }
  const Bytes input(std::istreambuf_iterator<char>(io.in), {});
  GuestRun g;
  try {
    vxa::isa::validate_image(image_bytes, opt.vm.mem_limit);
    g = run_guest(image_bytes, input, UINT64_MAX, opt.vm);
  } catch (const vxa::isa::ImageError& e) {
    io.err << "vxar: " << opt.image.string() << ": " << e.what() << "\n";
    return kExitCorrupt;
  } catch (const std::invalid_argument& e) {
    io.err << "vxar: " << e.what() << "\n";
    return kExitUsage;
  }
  io.out.write(reinterpret_cast<const char*>(g.output.data()),
               static_cast<std::streamsize>(g.output.size()));
  io.out.flush();
  if (opt.vm.verbose) {
    io.err.write(reinterpret_cast<const char*>(g.diagnostics.data()),
                 static_cast<std::streamsize>(g.diagnostics.size()));
  }
  switch (g.status.state) {
    case vxa::vm::RunState::kExited: return static_cast<int>(g.status.exit_code & 0xFF);
    case vxa::vm::RunState::kTrapped:
      io.err << "vxar: " << vxa::vm::describe(g.status) << "\n";
      return kExitTrapBase + static_cast<int>(g.status.trap.kind);
    default: return kExitOk;
  }
}

#endif  // VXAR_BASELINE

// ---- command line --------------------------------------------------------

namespace {

void add_vm_flags(CLI::App* cmd, VmOptions& vm, bool with_cache_flag) {
#ifndef VXAR_BASELINE
  cmd->add_option("--fuel", vm.fuel, "Instruction budget per stream")->capture_default_str();
  cmd->add_option("--mem-limit", vm.mem_limit, "Guest memory size in bytes")->capture_default_str();
  if (with_cache_flag) cmd->add_flag("--no-cache", [&vm](std::int64_t) { vm.use_cache = false; },
                                     "Decode every guest instruction each time it runs");
#else
  (void)with_cache_flag;
#endif
  cmd->add_flag("-v,--verbose", vm.verbose, "Show progress and decoder diagnostics");
}

}  // namespace

int run_cli(int argc, const char* const* argv, Io io) {
#ifdef VXAR_BASELINE
  CLI::App app{"vxar-baseline: VXA archive reader without the virtual machine"};
  app.name("vxar-baseline");
#else
  CLI::App app{"vxar: archiver with self-contained sandboxed decoders"};
  app.name("vxar");
#endif
  app.require_subcommand(1);

  ListOptions list_opt;
  auto* list = app.add_subcommand("list", "List archive entries");
  list->add_option("archive", list_opt.archive)->required();
  list->add_flag("--show-pseudo", list_opt.show_pseudo, "Include decoder pseudo-files");
  list->add_flag("--json", list_opt.json, "Machine-readable output");

  ExtractOptions ex_opt;
  auto* extract = app.add_subcommand("extract", "Extract entries");
  extract->add_option("archive", ex_opt.archive)->required();
  extract->add_option("names", ex_opt.names, "Entries to extract (default: all)");
  extract->add_option("-C,--output-dir", ex_opt.output_dir, "Destination directory");
#ifndef VXAR_BASELINE
  extract->add_flag("--decode-all", ex_opt.decode_all, "Also decode stored entries that carry a decoder");
  extract->add_flag("--native", ex_opt.allow_native, "Use built-in decoders for methods 8 and 9");
  extract->add_flag("--reuse-vm", ex_opt.reuse_vm, "Keep one VM per decoder across files");
#endif
  add_vm_flags(extract, ex_opt.vm, true);

  TestOptions test_opt;
  auto* test = app.add_subcommand("test", "Verify every entry with its archived decoder");
  test->add_option("archive", test_opt.archive)->required();
  test->add_flag("--json", test_opt.json, "Machine-readable output");
  add_vm_flags(test, test_opt.vm, true);

#ifndef VXAR_BASELINE
  AddOptions add_opt;
  std::string codec;
  auto* add = app.add_subcommand("add", "Create an archive from files and directories");
  add->add_option("archive", add_opt.archive)->required();
  add->add_option("inputs", add_opt.inputs)->required();
  add->add_option("-C,--directory", add_opt.base_dir, "Resolve inputs relative to this directory");
  add->add_option("--codec", codec, "Force a codec: vxflate, rle, pcm1 or vxsf");
  add_vm_flags(add, add_opt.vm, true);

  BenchOptions bench_opt;
  auto* bench = app.add_subcommand("bench", "Time archived decoders in the VM against native ones");
  bench->add_option("archive", bench_opt.archive)->required();
  bench->add_option("-n,--repetitions", bench_opt.repetitions, "Decodes per entry")->capture_default_str();
  bench->add_flag("--json", bench_opt.json, "Machine-readable output");
  add_vm_flags(bench, bench_opt.vm, false);

  fs::path asm_src, asm_out;
  auto* assemble = app.add_subcommand("asm", "Assemble VXA-32 source into a VXE image");
  assemble->add_option("source", asm_src)->required();
  assemble->add_option("output", asm_out)->required();

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run a VXE image as a stdin-to-stdout filter");
  run->add_option("image", run_opt.image)->required();
  add_vm_flags(run, run_opt.vm, true);
#endif

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, io.out, io.err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (list->parsed()) return cmd_list(list_opt, io);
  if (extract->parsed()) return cmd_extract(ex_opt, io);
  if (test->parsed()) return cmd_test(test_opt, io);
#ifndef VXAR_BASELINE
  if (add->parsed()) {
    if (!codec.empty()) add_opt.codec = codec;
    return cmd_add(add_opt, io);
  }
  if (bench->parsed()) return cmd_bench(bench_opt, io);
  if (assemble->parsed()) return cmd_asm(asm_src, asm_out, io);
  if (run->parsed()) return cmd_run(run_opt, io);
#endif
  return kExitUsage;
}

}  // namespace vxar
