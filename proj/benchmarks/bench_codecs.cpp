#include <benchmark/benchmark.h>

#include "data.hpp"
#include "vxa/codecs/pcm1.hpp"
#include "vxa/codecs/rle.hpp"
#include "vxa/codecs/vxflate.hpp"
#include "vxa/container/crc32.hpp"

using namespace vxa;

static void BM_Crc32(benchmark::State& state) {
  const Bytes in = bench::text(1 << 20);
  for (auto _ : state) benchmark::DoNotOptimize(container::crc32(in));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(in.size()));
}
BENCHMARK(BM_Crc32);

static void BM_VxflateEncode(benchmark::State& state) {
  const Bytes in = bench::text(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(codecs::encode_vxflate(in));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VxflateEncode)->Arg(64 << 10)->Arg(1 << 20);

static void BM_VxflateDecodeHost(benchmark::State& state) {
  const Bytes in = bench::text(1 << 20);
  const Bytes enc = codecs::encode_vxflate(in);
  for (auto _ : state) benchmark::DoNotOptimize(codecs::decode_vxflate_host(enc, in.size()));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(in.size()));
}
BENCHMARK(BM_VxflateDecodeHost);

static void BM_RleRoundTrip(benchmark::State& state) {
  const Bytes in = bench::repetitive(1 << 20);
  for (auto _ : state) benchmark::DoNotOptimize(codecs::decode_rle_host(codecs::encode_rle(in)));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(in.size()));
}
BENCHMARK(BM_RleRoundTrip);

static void BM_Pcm1Encode(benchmark::State& state) {
  const Bytes wav = bench::sine_wav(441000);
  for (auto _ : state) benchmark::DoNotOptimize(codecs::encode_pcm1(wav));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(wav.size()));
}
BENCHMARK(BM_Pcm1Encode);

static void BM_Pcm1DecodeHost(benchmark::State& state) {
  const Bytes wav = bench::sine_wav(441000);
  const Bytes enc = codecs::encode_pcm1(wav);
  for (auto _ : state) benchmark::DoNotOptimize(codecs::decode_pcm1_host(enc));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(wav.size()));
}
BENCHMARK(BM_Pcm1DecodeHost);
