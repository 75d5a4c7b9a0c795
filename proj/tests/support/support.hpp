#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vxa/bytes.hpp"
#include "vxa/vm/machine.hpp"

namespace vxtest {

using vxa::Bytes;
using vxa::ByteView;

// ---- independent oracles ------------------------------------------------

// zlib's crc32.
std::uint32_t zlib_crc32(ByteView data);

// Brute-force greedy LZSS: at each position scan every offset 1..4096 in
// increasing order and keep the first longest match of length >= 3.
Bytes naive_lzss_encode(ByteView input);

// Straight reading of the token format; decodes until the stream ends.
// Returns false on a malformed stream.
bool reference_lzss_decode(ByteView stream, Bytes& out);

// Rice code of z as a string of '0'/'1' characters.
std::string rice_string(std::uint32_t z, int k);
// MSB-first rendering of the first `bits` bits.
std::string bit_string(ByteView bytes, std::size_t bits);

// ---- fixtures ------------------------------------------------------------

// Canonical 44-byte header plus interleaved samples.
Bytes make_wav(const std::vector<std::int16_t>& interleaved, int channels,
               std::uint32_t rate = 44100);
Bytes sine_wav(double seconds, double freq, std::uint32_t rate = 44100, double amplitude = 12000);

Bytes random_bytes(std::mt19937_64& rng, std::size_t n);
// Short-alphabet text with repeats, compressible but not trivially so.
Bytes random_text(std::mt19937_64& rng, std::size_t n);
Bytes repetitive_text(std::size_t n);

struct GuestResult {
  vxa::vm::Status status;
  Bytes output;
  Bytes diagnostics;
  std::uint64_t instret = 0;
  vxa::vm::Counters counters;
};

GuestResult run_image(const vxa::isa::ExecutableImage& image, ByteView input,
                      vxa::vm::MachineConfig cfg = {});
GuestResult run_source(const std::string& source, ByteView input = {},
                       vxa::vm::MachineConfig cfg = {});
GuestResult run_bundled(const std::string& codec, ByteView input, vxa::vm::MachineConfig cfg = {});

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, ByteView data);
Bytes read_file(const std::filesystem::path& p);

// Runs the vxar command line in-process.
struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};
CliResult vxar(const std::vector<std::string>& args, const std::string& stdin_data = {});

}  // namespace vxtest
