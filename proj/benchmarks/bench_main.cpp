#include <benchmark/benchmark.h>

#include "setgen/creation.hpp"
#include "setgen/losses.hpp"
#include "setgen/matching.hpp"
#include "setgen/nn.hpp"
#include "setgen/ops.hpp"
#include "setgen/rng.hpp"
#include "setgen/synthetic.hpp"

using namespace setgen;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform();
  return m;
}

void BM_Hungarian(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix cost = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matching::hungarian(cost).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(4, 64)->Complexity();

void BM_OtUniform(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 3, rng);
  const Matrix y = random_matrix(n + 3, 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matching::ot_uniform(x, y).cost);
}
BENCHMARK(BM_OtUniform)->Arg(5)->Arg(10)->Arg(20)->Arg(35);

void BM_W2EqualBackward(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 3, rng);
  const Matrix y = random_matrix(n, 3, rng);
  for (auto _ : state) {
    Tensor xh = Tensor::from_matrix(y, true);
    Tensor l = losses::w2_equal(Tensor::from_matrix(x), xh);
    l.backward();
    benchmark::DoNotOptimize(xh.grad().data());
  }
}
BENCHMARK(BM_W2EqualBackward)->Arg(9)->Arg(35);

void BM_CreateTopn(benchmark::State& state) {
  Rng rng(4);
  const auto p = creation::TopnParams::init(32, 64, 16, 70, rng);
  std::vector<double> zv(32);
  for (double& v : zv) v = rng.normal();
  const Tensor z = Tensor::row(zv);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(creation::create_topn(p, z, n).points.data());
}
BENCHMARK(BM_CreateTopn)->Arg(9)->Arg(35);

void BM_TransformerBlockForwardBackward(benchmark::State& state) {
  Rng rng(5);
  const auto p = nn::TransformerParams::init(64, 4, rng);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 64, rng);
  for (auto _ : state) {
    Tensor l = ops::sum(nn::transformer_block(p, Tensor::from_matrix(x)));
    l.backward();
    benchmark::DoNotOptimize(p.query.weight.grad().data());
  }
}
BENCHMARK(BM_TransformerBlockForwardBackward)->Arg(9)->Arg(35);

void BM_GenDataset(benchmark::State& state) {
  const synth::SynthConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synth::gen_dataset(cfg, 50, ++seed).sets.size());
}
BENCHMARK(BM_GenDataset)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
