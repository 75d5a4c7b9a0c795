#include "support.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "commands.hpp"
#include "vxa/codecs/bundled.hpp"
#include "vxa/isa/assembler.hpp"

namespace vxtest {

std::uint32_t zlib_crc32(ByteView data) {
  uLong c = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(c, data.data(), static_cast<uInt>(data.size())));
}

Bytes naive_lzss_encode(ByteView in) {
  Bytes out;
  std::size_t flag_pos = 0;
  int items = 8;
  auto slot = [&]() {
    if (items == 8) {
      flag_pos = out.size();
      out.push_back(0);
      items = 0;
    }
    return items++;
  };
  std::size_t pos = 0;
  while (pos < in.size()) {
    std::size_t best_len = 0, best_off = 0;
    for (std::size_t off = 1; off <= 4096 && off <= pos; ++off) {
      std::size_t len = 0;
      while (len < 18 && pos + len < in.size() && in[pos - off + len] == in[pos + len]) ++len;
      if (len > best_len) {
        best_len = len;
        best_off = off;
      }
    }
    const int bit = slot();
    if (best_len >= 3) {
      out[flag_pos] |= static_cast<std::uint8_t>(1 << bit);
      const unsigned v = static_cast<unsigned>((best_off - 1) | ((best_len - 3) << 12));
      out.push_back(static_cast<std::uint8_t>(v & 0xFF));
      out.push_back(static_cast<std::uint8_t>(v >> 8));
      pos += best_len;
    } else {
      out.push_back(in[pos++]);
    }
  }
  return out;
}

bool reference_lzss_decode(ByteView s, Bytes& out) {
  out.clear();
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned flags = s[i++];
    for (int b = 0; b < 8 && i < s.size(); ++b) {
      if (flags & (1u << b)) {
        if (i + 2 > s.size()) return false;
        const unsigned v = s[i] + 256u * s[i + 1];
        i += 2;
        const std::size_t off = (v % 4096) + 1, len = (v / 4096) + 3;
        if (off > out.size()) return false;
        for (std::size_t n = 0; n < len; ++n) out.push_back(out[out.size() - off]);
      } else {
        out.push_back(s[i++]);
      }
    }
  }
  return true;
}

std::string rice_string(std::uint32_t z, int k) {
  std::string s(z >> k, '1');
  s += '0';
  for (int i = k - 1; i >= 0; --i) s += ((z >> i) & 1) ? '1' : '0';
  return s;
}

std::string bit_string(ByteView bytes, std::size_t bits) {
  std::string s;
  for (std::size_t i = 0; i < bits; ++i) s += ((bytes[i / 8] >> (7 - i % 8)) & 1) ? '1' : '0';
  return s;
}

Bytes make_wav(const std::vector<std::int16_t>& samples, int channels, std::uint32_t rate) {
  Bytes w;
  vxa::ByteWriter b(w);
  const std::uint32_t ds = static_cast<std::uint32_t>(samples.size() * 2);
  b.bytes(vxa::as_bytes("RIFF"));
  b.u32(36 + ds);
  b.bytes(vxa::as_bytes("WAVEfmt "));
  b.u32(16);
  b.u16(1);
  b.u16(static_cast<std::uint16_t>(channels));
  b.u32(rate);
  b.u32(rate * channels * 2);
  b.u16(static_cast<std::uint16_t>(channels * 2));
  b.u16(16);
  b.bytes(vxa::as_bytes("data"));
  b.u32(ds);
  for (auto s : samples) b.u16(static_cast<std::uint16_t>(s));
  return w;
}

Bytes sine_wav(double seconds, double freq, std::uint32_t rate, double amplitude) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<std::int16_t> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = static_cast<std::int16_t>(std::lround(amplitude * std::sin(2 * M_PI * freq * static_cast<double>(i) / rate)));
  return make_wav(s, 1, rate);
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

Bytes random_text(std::mt19937_64& rng, std::size_t n) {
  static const char* words[] = {"archive", "decoder", "sandbox", "fragment", "the", "of",
                                "virtual", "machine", "page", "stream", "codec", "a"};
  Bytes b;
  while (b.size() < n) {
    const char* w = words[rng() % 12];
    for (const char* p = w; *p && b.size() < n; ++p) b.push_back(static_cast<std::uint8_t>(*p));
    if (b.size() < n) b.push_back(rng() % 9 == 0 ? '\n' : ' ');
  }
  return b;
}

Bytes repetitive_text(std::size_t n) {
  const std::string line = "The quick brown fox jumps over the lazy dog. 0123456789\n";
  Bytes b;
  b.reserve(n);
  for (std::size_t i = 0; b.size() < n; ++i) b.push_back(static_cast<std::uint8_t>(line[i % line.size()]));
  return b;
}

GuestResult run_image(const vxa::isa::ExecutableImage& image, ByteView input,
                      vxa::vm::MachineConfig cfg) {
  GuestResult r;
  vxa::vm::Machine m(image, cfg, {input, &r.output, &r.diagnostics, true});
  r.status = m.run();
  r.instret = m.instret();
  r.counters = m.counters();
  return r;
}

GuestResult run_source(const std::string& source, ByteView input, vxa::vm::MachineConfig cfg) {
  return run_image(vxa::isa::assemble(source), input, cfg);
}

GuestResult run_bundled(const std::string& codec, ByteView input, vxa::vm::MachineConfig cfg) {
  return run_image(vxa::isa::validate_image(vxa::codecs::bundled_decoder(codec)), input, cfg);
}

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = std::filesystem::temp_directory_path() / ("vxa-test-" + std::to_string(rng()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& p, ByteView data) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Bytes read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(f), {});
}

CliResult vxar(const std::vector<std::string>& args, const std::string& stdin_data) {
  std::vector<const char*> argv{"vxar"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(stdin_data);
  std::ostringstream out, err;
  CliResult r;
  r.code = vxar::run_cli(static_cast<int>(argv.size()), argv.data(), {in, out, err});
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace vxtest
