#include <benchmark/benchmark.h>

#include <random>

#include "gangs/gang_model.hpp"
#include "gangs/matrix_game.hpp"
#include "gangs/neural.hpp"
#include "gangs/rng.hpp"
#include "gangs/synth_data.hpp"

namespace {

using namespace gangs;

game::PayoffMatrix random_game(int size, std::uint64_t seed) {
  game::PayoffMatrix m(size, size);
  std::mt19937_64 eng(seed);
  for (auto& v : m.entries) v = static_cast<double>(eng() >> 11) * 0x1.0p-52 - 1.0;
  return m;
}

void BM_SolveZeroSum(benchmark::State& state) {
  const auto m = random_game(static_cast<int>(state.range(0)), 17);
  for (auto _ : state) {
    auto res = game::solve_zero_sum(m);
    benchmark::DoNotOptimize(res.value);
  }
}
BENCHMARK(BM_SolveZeroSum)->Arg(10)->Arg(25)->Arg(50);

nn::MlpSpec desk_net(int in, int out, nn::Activation last) {
  nn::MlpSpec spec;
  spec.layer_sizes = {in, 64, out};
  spec.activations = {nn::Activation::tanh, last};
  return spec;
}

void BM_Forward(benchmark::State& state) {
  Rng rng(5);
  const auto net = nn::glorot_init(desk_net(2, 1, nn::Activation::sigmoid), rng);
  nn::Batch in(static_cast<int>(state.range(0)), 2);
  for (auto& v : in.data) v = rng.uniform(-2.0, 2.0);
  for (auto _ : state) {
    auto out = nn::forward(net, in);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Arg(1024);

void BM_Gradient(benchmark::State& state) {
  Rng rng(6);
  const auto net = nn::glorot_init(desk_net(2, 1, nn::Activation::sigmoid), rng);
  nn::Batch in(static_cast<int>(state.range(0)), 2);
  for (auto& v : in.data) v = rng.uniform(-2.0, 2.0);
  const auto loss = [](const nn::Batch& out) {
    nn::LossValue lv;
    lv.output_grad = nn::Batch(out.rows, out.cols);
    for (std::size_t k = 0; k < out.data.size(); ++k) {
      lv.loss += out.data[k];
      lv.output_grad.data[k] = 1.0;
    }
    return lv;
  };
  for (auto _ : state) {
    auto res = nn::gradient(net, in, loss);
    benchmark::DoNotOptimize(res.param_grad.data());
  }
}
BENCHMARK(BM_Gradient)->Arg(64)->Arg(128)->Arg(1024);

gang::GangSpec desk_spec() {
  gang::GangSpec spec;
  spec.data_dist = data::make_grid(9, 2.0, 0.1);
  spec.noise = data::NoiseDist{};
  spec.gen_spec = desk_net(2, 2, nn::Activation::linear);
  spec.clf_spec = desk_net(2, 1, nn::Activation::sigmoid);
  spec.phi = gang::MeasuringFn::make_bounded_log(1e-5);
  return spec;
}

void BM_SimulateCell(benchmark::State& state) {
  const auto spec = desk_spec();
  Rng init(7);
  const auto gen = nn::glorot_init(spec.gen_spec, init);
  const auto clf = nn::glorot_init(spec.clf_spec, init);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng rng(++seed);
    const double u = gang::simulate_cell(spec, gen, clf, static_cast<int>(state.range(0)), rng);
    benchmark::DoNotOptimize(u);
  }
}
BENCHMARK(BM_SimulateCell)->Arg(1000)->Arg(10000);

void BM_SampleMixture(benchmark::State& state) {
  const auto mix = data::make_grid(9, 2.0, 0.1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng rng(++seed);
    const auto pts = data::sample(mix, static_cast<int>(state.range(0)), rng);
    benchmark::DoNotOptimize(pts.data());
  }
}
BENCHMARK(BM_SampleMixture)->Arg(128)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
