#include <benchmark/benchmark.h>

#include "gridtrust/chip.hpp"
#include "gridtrust/clearing.hpp"
#include "gridtrust/crypto.hpp"
#include "gridtrust/iur.hpp"
#include "gridtrust/random.hpp"

using namespace gridtrust;

static void BM_MacCompute(benchmark::State& state) {
  DeterministicRandom rng(1);
  crypto::SymmetricKey key(rng.bytes(64));
  auto msg = rng.bytes(static_cast<std::size_t>(state.range(0)));
  std::uint64_t ctr = 0;
  for (auto _ : state) benchmark::DoNotOptimize(crypto::mac_compute(key, "bench", msg, ++ctr));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MacCompute)->Arg(64)->Arg(1024);

static void BM_Sign(benchmark::State& state) {
  DeterministicRandom rng(2);
  auto kp = crypto::keypair_generate(rng.bytes(32));
  auto msg = rng.bytes(128);
  for (auto _ : state) benchmark::DoNotOptimize(crypto::sign(kp.private_seed, msg));
}
BENCHMARK(BM_Sign);

static void BM_Verify(benchmark::State& state) {
  DeterministicRandom rng(3);
  auto kp = crypto::keypair_generate(rng.bytes(32));
  auto msg = rng.bytes(128);
  auto sig = crypto::sign(kp.private_seed, msg);
  for (auto _ : state) benchmark::DoNotOptimize(crypto::verify(kp.public_key, msg, sig));
}
BENCHMARK(BM_Verify);

static void BM_Clearing(benchmark::State& state) {
  DeterministicRandom rng(4);
  std::vector<te::Bid> bids;
  for (int i = 0; i < state.range(0); ++i) {
    te::Bid b;
    b.prosumer_id = "p" + std::to_string(i);
    b.kind = i % 2 ? te::BidKind::Generation : te::BidKind::Consumption;
    b.quantity_w = static_cast<te::Watts>(rng.next_u64() % 4000 + 1);
    b.price_per_kwh = static_cast<te::MicroPrice>(rng.next_u64() % 300000);
    b.round = 1;
    bids.push_back(b);
  }
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(te::clear_bids(1, bids));
    } catch (const Error&) {
    }
  }
}
BENCHMARK(BM_Clearing)->Arg(10)->Arg(100)->Arg(1000);

static void BM_Provisioning(benchmark::State& state) {
  LogicalClock clock;
  DeterministicRandom rng(5);
  iur::IurService iur(clock, rng, rng.array<32>());
  std::uint64_t n = 0;
  for (auto _ : state) {
    auto id = "dev" + std::to_string(n++);
    chip::ChipIdentity ident{id, crypto::SymmetricKey(rng.bytes(64)), rng.array<32>()};
    chip::CtcChip chip(ident, clock, rng);
    iur.register_device(id, ident.supply_chain_secret);
    auto out = iur.provision_device(id, chip::direct_pipe(chip));
    if (!out.committed) state.SkipWithError("provisioning failed");
  }
}
BENCHMARK(BM_Provisioning);

BENCHMARK_MAIN();
