#include <benchmark/benchmark.h>

#include "reasonkit/losses.hpp"
#include "reasonkit/rng.hpp"

namespace {

rk::BatchScores make_batch(std::size_t n, int hidden) {
  rk::Rng rng(17);
  rk::BatchScores batch;
  batch.correct.resize(n);
  batch.wrong.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.correct[i] = {rng.normal(), rng.normal()};
    batch.wrong[i] = {rng.normal(), rng.normal()};
  }
  batch.features.resize(long(2 * n), hidden);
  for (long r = 0; r < batch.features.rows(); ++r) {
    for (long c = 0; c < hidden; ++c) batch.features(r, c) = rng.normal();
  }
  batch.labels.assign(2 * n, 0);
  for (std::size_t i = 0; i < n; ++i) batch.labels[i] = 1;
  return batch;
}

void BM_Tbl(benchmark::State& state) {
  const auto batch = make_batch(std::size_t(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(rk::tbl(batch));
}

void BM_TblWithGrad(benchmark::State& state) {
  const auto batch = make_batch(std::size_t(state.range(0)), 8);
  rk::LossGrads grads;
  for (auto _ : state) benchmark::DoNotOptimize(rk::tbl_with_grad(batch, grads));
}

void BM_Mrl(benchmark::State& state) {
  const auto batch = make_batch(std::size_t(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(rk::mrl(batch, 1.0));
}

void BM_Supcon(benchmark::State& state) {
  const auto batch = make_batch(std::size_t(state.range(0)), 128);
  for (auto _ : state) benchmark::DoNotOptimize(rk::supcon(batch, 0.1).value);
}

void BM_SupconWithGrad(benchmark::State& state) {
  const auto batch = make_batch(std::size_t(state.range(0)), 128);
  rk::LossGrads grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rk::supcon_with_grad(batch, 0.1, grads).value);
  }
}

}  // namespace

BENCHMARK(BM_Tbl)->Arg(16)->Arg(64)->Arg(196);
BENCHMARK(BM_TblWithGrad)->Arg(16)->Arg(64)->Arg(196);
BENCHMARK(BM_Mrl)->Arg(16)->Arg(64)->Arg(196);
BENCHMARK(BM_Supcon)->Arg(16)->Arg(64)->Arg(196);
BENCHMARK(BM_SupconWithGrad)->Arg(16)->Arg(64)->Arg(196);
