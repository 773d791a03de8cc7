#include <benchmark/benchmark.h>

#include <memory>
#include <string>
#include <vector>

#include "reasonkit/encoder.hpp"
#include "reasonkit/rng.hpp"

namespace {

struct Setup {
  rk::ToyTransformer encoder;
  std::vector<rk::TextPair> inputs;

  static Setup make(int batch) {
    rk::EncoderSpec spec;
    spec.max_sequence_length = 32;
    spec.hidden_size = 64;
    spec.num_layers = 2;
    spec.num_heads = 4;
    spec.ffn_size = 128;

    std::vector<std::string> texts;
    rk::Rng rng(3);
    std::vector<rk::TextPair> inputs;
    for (int i = 0; i < batch; ++i) {
      std::string q = "question";
      for (int w = 0; w < 10; ++w) q += " word" + std::to_string(rng.uniform(200));
      std::string a = "answer word" + std::to_string(rng.uniform(200));
      texts.push_back(q);
      texts.push_back(a);
      inputs.push_back({q, a});
    }
    Setup setup{rk::ToyTransformer(spec, rk::Vocab::build(texts)), std::move(inputs)};
    setup.encoder.init_params(7);
    return setup;
  }
};

void BM_Encode(benchmark::State& state) {
  auto setup = Setup::make(int(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(setup.encoder.encode(setup.inputs, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EncodeBackward(benchmark::State& state) {
  auto setup = Setup::make(int(state.range(0)));
  std::vector<double> grad(setup.encoder.param_count(), 0.0);
  for (auto _ : state) {
    auto cache = setup.encoder.make_cache();
    const auto features = setup.encoder.encode(setup.inputs, cache.get());
    const Eigen::MatrixXd dfeatures = Eigen::MatrixXd::Ones(features.rows(),
                                                            features.cols());
    setup.encoder.backward(*cache, dfeatures, grad.data());
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Encode)->Arg(1)->Arg(16)->Arg(64);
BENCHMARK(BM_EncodeBackward)->Arg(1)->Arg(16)->Arg(64);
