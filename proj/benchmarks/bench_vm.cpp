#include <benchmark/benchmark.h>

#include "data.hpp"
#include "vxa/codecs/bundled.hpp"
#include "vxa/codecs/pcm1.hpp"
#include "vxa/codecs/vxflate.hpp"
#include "vxa/isa/assembler.hpp"
#include "vxa/isa/image.hpp"
#include "vxa/vm/machine.hpp"

using namespace vxa;

namespace {

// range(0): 1 = fragment cache on, 0 = decode every instruction.
void run_guest(benchmark::State& state, const isa::ExecutableImage& img, ByteView input,
               std::size_t out_size, bool link = true) {
  vm::MachineConfig cfg;
  cfg.use_cache = state.range(0) != 0;
  cfg.link_fragments = link;
  std::uint64_t instret = 0;
  for (auto _ : state) {
    Bytes out, diag;
    out.reserve(out_size);
    vm::Machine m(img, cfg, {input, &out, &diag, true});
    const auto& st = m.run();
    if (st.state == vm::RunState::kTrapped) state.SkipWithError("guest trapped");
    instret = m.instret();
    benchmark::DoNotOptimize(out.data());
  }
  if (out_size) state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(out_size));
  state.counters["instret"] = static_cast<double>(instret);
  state.counters["Minstr"] = benchmark::Counter(static_cast<double>(instret) * state.iterations() / 1e6,
                                              benchmark::Counter::kIsRate);
}

}  // namespace

static void BM_GuestVxflate(benchmark::State& state) {
  const Bytes in = bench::repetitive(1 << 20);
  const Bytes enc = codecs::encode_vxflate(in);
  run_guest(state, isa::validate_image(codecs::bundled_decoder("vxflate")), enc, in.size());
}
BENCHMARK(BM_GuestVxflate)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

static void BM_GuestVxflateUnlinked(benchmark::State& state) {
  const Bytes in = bench::repetitive(1 << 20);
  const Bytes enc = codecs::encode_vxflate(in);
  run_guest(state, isa::validate_image(codecs::bundled_decoder("vxflate")), enc, in.size(), false);
}
BENCHMARK(BM_GuestVxflateUnlinked)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_GuestPcm1(benchmark::State& state) {
  const Bytes wav = bench::sine_wav(441000);
  const Bytes enc = codecs::encode_pcm1(wav);
  run_guest(state, isa::validate_image(codecs::bundled_decoder("pcm1")), enc, wav.size());
}
BENCHMARK(BM_GuestPcm1)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

static void BM_GuestAluLoop(benchmark::State& state) {
  const auto img = isa::assemble(R"(
.entry start
.text
start:  MOVI r1, 1000000
        MOVI r0, 0
        MOVI r2, 0x55
        MOVI r3, 0
loop:   ADD r0, r1
        XOR r0, r2
        ADDI r1, -1
        BNE r1, r3, loop
        MOVI r0, 0
        SYS 0
)");
  run_guest(state, img, {}, 0);
}
BENCHMARK(BM_GuestAluLoop)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

static void BM_MachineSetup(benchmark::State& state) {
  const auto img = isa::validate_image(codecs::bundled_decoder("vxflate"));
  vm::MachineConfig cfg;
  for (auto _ : state) {
    Bytes out, diag;
    vm::Machine m(img, cfg, {{}, &out, &diag, true});
    benchmark::DoNotOptimize(m.pc());
  }
}
BENCHMARK(BM_MachineSetup);
