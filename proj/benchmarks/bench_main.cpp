#include <benchmark/benchmark.h>

#include "skyseg/layers.hpp"
#include "skyseg/network.hpp"

namespace {

using namespace skyseg;

void BM_Conv2dForward(benchmark::State& state) {
  auto x = TensorF::uniform({1, 32, 64, 64}, 1, -1.0f, 1.0f);
  auto w = TensorF::uniform({32, 32, 3, 3}, 2, -0.1f, 0.1f);
  auto b = TensorF::zeros({32});
  for (auto _ : state) {
    auto y = conv2d(x, w, b);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_Conv2dForward);

void BM_SeparableConv2dForward(benchmark::State& state) {
  auto x = TensorF::uniform({1, 32, 64, 64}, 1, -1.0f, 1.0f);
  auto dw = TensorF::uniform({32, 1, 3, 3}, 2, -0.1f, 0.1f);
  auto pw = TensorF::uniform({32, 32, 1, 1}, 3, -0.1f, 0.1f);
  auto b = TensorF::zeros({32});
  for (auto _ : state) {
    auto y = separable_conv2d(x, dw, pw, b);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_SeparableConv2dForward);

void BM_MicroNetForward(benchmark::State& state) {
  NetworkConfig cfg;
  cfg.sl_counts.assign(11, 1);
  cfg.growth = 2;
  cfg.stem_channels = 4;
  cfg.craspp_rates = {1, 2};
  cfg.craspp_width = 4;
  cfg.lkbr_k = 3;
  auto net = Network<float>::build(cfg);
  auto img = TensorF::uniform({1, 3, 64, 64}, 1, 0.0f, 1.0f);
  for (auto _ : state) {
    auto out = net.forward(img);
    benchmark::DoNotOptimize(out[0].data().data());
  }
}
BENCHMARK(BM_MicroNetForward);

}  // namespace

BENCHMARK_MAIN();
