// SPDX-License-Identifier: Apache-2.0
// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "polarnn/decoders.hpp"
#include "polarnn/eval_harness.hpp"
#include "polarnn/nn_builder.hpp"

using namespace polarnn;

namespace {

struct Arrays {
  std::vector<double> a, b, out;
  explicit Arrays(std::size_t n) : a(n), b(n), out(n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50, 50);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
  }
};

template <bool Parallel>
void BM_f(benchmark::State& state) {
  const auto variant = kAllFVariants[static_cast<std::size_t>(state.range(0))];
  Arrays x(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      f_batch(variant, x.a, x.b, x.out);
    } else {
      f_batch_serial(variant, x.a, x.b, x.out);
    }
    benchmark::DoNotOptimize(x.out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.SetLabel(std::string(to_string(variant)));
}

template <bool Parallel>
void BM_run_ber(benchmark::State& state) {
  const auto code = build_polar_code(4, 11, 1.0);
  const auto spec = state.range(0) ? nn_decoder_spec(build_decoder(code)) : sc_decoder_spec(code);
  const std::vector<double> snr{1.0};
  const StopRule stop{16384, 0, 16384};
  for (auto _ : state) {
    auto pts = Parallel ? run_ber(spec, code, snr, stop, 1) : run_ber_serial(spec, code, snr, stop, 1);
    benchmark::DoNotOptimize(pts);
  }
  state.SetItemsProcessed(state.iterations() * 16384);
  state.SetLabel(state.range(0) ? "nn" : "sc");
}

void f_args(benchmark::internal::Benchmark* b) {
  for (int v = 0; v < 4; ++v)
    for (int n : {1 << 12, 1 << 16, 1 << 20}) b->Args({v, n});
}

}  // namespace

BENCHMARK(BM_f<false>)->Name("f_serial")->Apply(f_args);
BENCHMARK(BM_f<true>)->Name("f_openmp")->Apply(f_args);
BENCHMARK(BM_run_ber<false>)->Name("run_ber_serial")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run_ber<true>)->Name("run_ber_openmp")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
