#include <benchmark/benchmark.h>

#include "gtpulse/gtpu.hpp"

namespace {

using namespace gtpulse;

std::vector<std::uint8_t> sample_wire(std::size_t payload_size) {
  const auto inner = make_inner_ipv4(0x0A000001, 0xCB00710A, 40001, 7777, 17,
                                     payload_size);
  return encode_gtpu(make_gpdu(Teid{1001}, inner)).value();
}

void BM_ParseGpdu(benchmark::State& state) {
  const auto wire = sample_wire(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto packet = parse_gtpu(wire);
    benchmark::DoNotOptimize(packet);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(wire.size()));
}
BENCHMARK(BM_ParseGpdu)->Arg(32)->Arg(256)->Arg(1200);

void BM_EncodeGpdu(benchmark::State& state) {
  const auto inner = make_inner_ipv4(0x0A000001, 0xCB00710A, 40001, 7777, 17,
                                     static_cast<std::size_t>(state.range(0)));
  const GtpuPacket packet = make_gpdu(Teid{1001}, inner);
  for (auto _ : state) {
    auto wire = encode_gtpu(packet);
    benchmark::DoNotOptimize(wire);
  }
}
BENCHMARK(BM_EncodeGpdu)->Arg(32)->Arg(1200);

void BM_ExtractTeid(benchmark::State& state) {
  const auto wire = sample_wire(64);
  for (auto _ : state) {
    auto teid = extract_teid(wire);
    benchmark::DoNotOptimize(teid);
  }
}
BENCHMARK(BM_ExtractTeid);

}  // namespace
