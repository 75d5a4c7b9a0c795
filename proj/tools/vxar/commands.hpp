#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vxar {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitCorrupt = 2,
  kExitIntegrity = 3,
  kExitTrapBase = 70,
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

struct VmOptions {
  std::uint64_t fuel = 1ull << 33;
  std::uint64_t mem_limit = 1ull << 28;
  bool use_cache = true;
  bool verbose = false;
};

struct AddOptions {
  std::filesystem::path archive;
  std::vector<std::string> inputs;
  std::filesystem::path base_dir;  // entry names are relative to this
  std::optional<std::string> codec;
  VmOptions vm;
};

struct ListOptions {
  std::filesystem::path archive;
  bool show_pseudo = false;
  bool json = false;
};

// Default policy: archived decoders only, fresh VM per file.
struct ExtractOptions {
  std::filesystem::path archive;
  std::vector<std::string> names;  // empty: all entries
  std::filesystem::path output_dir = ".";
  bool decode_all = false;
  bool allow_native = false;
  bool reuse_vm = false;
  VmOptions vm;
};

struct TestOptions {
  std::filesystem::path archive;
  bool json = false;
  VmOptions vm;
};

struct BenchOptions {
  std::filesystem::path archive;
  int repetitions = 5;
  bool json = false;
  VmOptions vm;
};

struct RunOptions {
  std::filesystem::path image;
  VmOptions vm;
};

int cmd_add(const AddOptions& opt, Io io);
int cmd_list(const ListOptions& opt, Io io);
int cmd_extract(const ExtractOptions& opt, Io io);
int cmd_test(const TestOptions& opt, Io io);
int cmd_bench(const BenchOptions& opt, Io io);
int cmd_asm(const std::filesystem::path& source, const std::filesystem::path& out, Io io);
int cmd_run(const RunOptions& opt, Io io);

// Parses argv and dispatches; returns the process exit status.
int run_cli(int argc, const char* const* argv, Io io);

// Rejects absolute names, empty components and "..". Returns the relative
// path to create under the output directory.
std::optional<std::filesystem::path> safe_entry_path(const std::string& name);

}  // namespace vxar
