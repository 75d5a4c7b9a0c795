// Built against an ASan/UBSan copy of the core: any host-side memory error
// or undefined behaviour while running hostile guests aborts the test.

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "adversarial.hpp"
#include "vxa/codecs/bundled.hpp"
#include "vxa/codecs/pcm1.hpp"
#include "vxa/codecs/rle.hpp"
#include "vxa/codecs/vxflate.hpp"
#include "vxa/codecs/vxsf.hpp"
#include "vxa/container/archive.hpp"
#include "vxa/isa/image.hpp"
#include "vxa/isa/instruction.hpp"

using namespace vxa;
using vm::Machine;
using vm::MachineConfig;
using vm::RunState;

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

MachineConfig cfg(bool cache, std::uint64_t fuel = 20000) {
  MachineConfig c;
  c.mem_limit = 1 << 24;
  c.fuel = fuel;
  c.use_cache = cache;
  return c;
}

vm::Status run(const isa::ExecutableImage& img, ByteView input, bool cache, std::uint64_t fuel = 20000) {
  Bytes out, diag;
  Machine m(img, cfg(cache, fuel), {input, &out, &diag, true, 1 << 22});
  return m.run();
}

}  // namespace

TEST(Containment, AdversarialSuite) {
  const auto suite = vxtest::adversarial_suite();
  ASSERT_GE(suite.size(), 10u);
  for (const auto& c : suite) {
    const auto o = vxtest::run_adversarial(c);
    EXPECT_TRUE(o.ok) << c.name << ": " << vm::describe(o.cached) << " / " << vm::describe(o.uncached);
  }
}

TEST(Containment, RandomInstructionStreams) {
  std::mt19937_64 rng(0xA5A5);
  const std::uint8_t ops[] = {0x01, 0x02, 0x10, 0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17,
                              0x18, 0x19, 0x1A, 0x1B, 0x20, 0x21, 0x22, 0x23, 0x30, 0x31,
                              0x32, 0x33, 0x34, 0x35, 0x36, 0x37, 0x40, 0x41, 0x50};
  for (int trial = 0; trial < 1500; ++trial) {
    Bytes code;
    while (code.size() < 300) {
      const std::uint8_t op = ops[rng() % std::size(ops)];
      Bytes b(isa::length_of(op));
      b[0] = op;
      for (std::size_t i = 1; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(rng());
      if (rng() % 4) b[1] &= 0x77;
      // Point some loads and stores at interesting places.
      if (op == 0x01 && rng() % 2) {
        const std::uint32_t targets[] = {0xFFFFFFFCu, (1u << 24) - 2, 0x1000, 0x2000, 0, (1u << 24) - 65536 - 8};
        store_le32(b.data() + 2, targets[rng() % std::size(targets)]);
      }
      if (op == 0x50) b[1] = static_cast<std::uint8_t>(rng() % 6);
      code.insert(code.end(), b.begin(), b.end());
    }
    isa::ExecutableImage img;
    img.entry = 0x1000;
    isa::Segment text;
    text.header = {0x1000, static_cast<std::uint32_t>(code.size()), 4096, isa::kPermR | isa::kPermX, 0};
    text.data = code;
    isa::Segment data;
    data.header = {0x2000, 0, 8192, isa::kPermR | isa::kPermW, 0};
    img.segments = {text, data};
    const Bytes input = random_bytes(rng, 100);
    const auto a = run(img, input, true);
    const auto b = run(img, input, false);
    ASSERT_EQ(a, b) << "trial " << trial << ": " << vm::describe(a) << " vs " << vm::describe(b);
    ASSERT_NE(a.state, RunState::kRunning);
  }
}

TEST(Containment, RawRandomCode) {
  std::mt19937_64 rng(0x5A5A);
  for (int trial = 0; trial < 1500; ++trial) {
    isa::ExecutableImage img;
    img.entry = 0x1000 + static_cast<std::uint32_t>(rng() % 4096);
    isa::Segment text;
    const Bytes code = random_bytes(rng, 4096);
    text.header = {0x1000, 4096, 4096, isa::kPermR | isa::kPermX, 0};
    text.data = code;
    img.segments = {text};
    const auto a = run(img, {}, true, 5000);
    const auto b = run(img, {}, false, 5000);
    ASSERT_EQ(a, b) << "trial " << trial;
  }
}

TEST(Containment, DecodersOnHostileStreams) {
  std::mt19937_64 rng(0xC0DE);
  const Bytes text = [&] {
    Bytes t;
    const char* words[] = {"alpha ", "beta ", "gamma ", "delta\n"};
    while (t.size() < 6000) {
      const char* w = words[rng() % 4];
      t.insert(t.end(), w, w + std::char_traits<char>::length(w));
    }
    return t;
  }();
  std::vector<std::int16_t> samples(3000);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = static_cast<std::int16_t>(8000 * ((i % 50) < 25 ? 1 : -1) + static_cast<int>(rng() % 200));
  Bytes wav;
  {
    ByteWriter w(wav);
    w.bytes(as_bytes("RIFF"));
    w.u32(36 + 6000);
    w.bytes(as_bytes("WAVEfmt "));
    w.u32(16);
    w.u16(1);
    w.u16(1);
    w.u32(8000);
    w.u32(16000);
    w.u16(2);
    w.u16(16);
    w.bytes(as_bytes("data"));
    w.u32(6000);
    for (auto s : samples) w.u16(static_cast<std::uint16_t>(s));
  }
  const std::pair<const char*, Bytes> valid[] = {
      {"vxflate", codecs::encode_vxflate(text)},
      {"vxsf", codecs::encode_vxsf(text)},
      {"rle", codecs::encode_rle(text)},
      {"pcm1", codecs::encode_pcm1(wav)},
  };
  for (const auto& [name, stream] : valid) {
    const auto img = isa::validate_image(codecs::bundled_decoder(name));
    for (int trial = 0; trial < 150; ++trial) {
      Bytes s;
      switch (trial % 3) {
        case 0: s = random_bytes(rng, rng() % 4000); break;
        case 1:
          s = stream;
          for (int f = 0; f < 4; ++f) s[rng() % s.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
          break;
        default: s.assign(stream.begin(), stream.begin() + static_cast<long>(rng() % stream.size())); break;
      }
      if (trial % 10 == 0 && s.size() >= 4) std::copy_n(stream.begin(), 4, s.begin());
      for (bool cache : {true, false}) {
        const auto st = run(img, s, cache, 50'000'000);
        ASSERT_NE(st.state, RunState::kRunning) << name;
      }
    }
  }
}

TEST(Containment, ArchiveParsingFuzz) {
  std::mt19937_64 rng(0xFEED);
  std::ostringstream os;
  {
    container::ArchiveWriter w(os);
    const auto dec = w.write_decoder_pseudofile(codecs::bundled_decoder("rle"));
    const Bytes data = random_bytes(rng, 300);
    w.write_entry("plain", container::kMethodStore, data, data);
    const Bytes runs(500, 'q');
    w.write_entry("runs", container::kMethodRle, runs, codecs::encode_rle(runs),
                  container::VxaExtension{dec, container::make_codec_name("rle")});
    w.finalize();
  }
  const std::string s = os.str();
  const Bytes good(s.begin(), s.end());
  for (int trial = 0; trial < 4000; ++trial) {
    Bytes b = good;
    const int flips = 1 + static_cast<int>(rng() % 3);
    for (int f = 0; f < flips; ++f) b[rng() % b.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    if (trial % 7 == 0) b.resize(rng() % b.size());
    try {
      auto a = container::Archive::from_bytes(b);
      for (const auto& e : a.entries()) {
        try {
          a.verify_entry_headers(e);
          const ByteView stream = a.read_entry_stream(e);
          if (e.header.vxa()) {
            const auto img = isa::validate_image(*a.locate_decoder(e));
            (void)run(img, stream, true, 1'000'000);
          }
        } catch (const container::ArchiveError&) {
        } catch (const isa::ImageError&) {
        }
      }
      try {
        (void)a.scan_local_entries();
      } catch (const container::ArchiveError&) {
      }
    } catch (const container::ArchiveError&) {
    }
  }
}

TEST(Containment, ImageAndDecodeFuzz) {
  std::mt19937_64 rng(0xBEEF);
  const Bytes good = isa::serialize_image(isa::assemble(".entry s\n.text\ns: SYS 0\n.data\n.word 1\n"));
  for (int i = 0; i < 20000; ++i) {
    Bytes b = good;
    for (int f = 0; f < 3; ++f) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
    if (i % 5 == 0) b.resize(rng() % b.size());
    try {
      const auto img = isa::validate_image(b, 1 << 24);
      (void)run(img, {}, i % 2 == 0, 1000);
    } catch (const isa::ImageError&) {
    } catch (const std::invalid_argument&) {
    }
  }
  for (int i = 0; i < 100000; ++i) {
    const Bytes b = random_bytes(rng, rng() % 8);
    (void)isa::decode_instruction(b);
  }
}
