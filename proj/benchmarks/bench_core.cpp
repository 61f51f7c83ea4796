// Microbenchmarks for the hot paths: the autodiff matmul kernel, a full
// forward/backward step on a desk-scale batch, dataset generation, and the
// pairwise-free AUC implementation.

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "fairlend/data.hpp"
#include "fairlend/losses.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/rng.hpp"
#include "fairlend/tensor.hpp"

namespace fl = fairlend;

static fl::Tensor random_matrix(int r, int c, uint64_t seed, bool rg) {
  fl::CounterRng rng(seed);
  fl::Tensor t = fl::Tensor::zeros({r, c}, rg);
  for (double& v : *t.data) v = rng.normal();
  return t;
}

static void BM_MatmulBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  fl::Tensor a = random_matrix(n, n, 1, true);
  fl::Tensor b = random_matrix(n, n, 2, true);
  for (auto _ : state) {
    fl::Tensor loss = fl::sum(fl::matmul(a, b));
    fl::backward(loss);
    benchmark::DoNotOptimize(a.grad->data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n) * n * n);
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128)->Arg(256);

static void BM_ForwardTrainStep(benchmark::State& state) {
  fl::GeneratorConfig gc;
  gc.n_borrowers = 512;
  gc.seed = 7;
  fl::DatasetSplit split = fl::generate_population(gc);
  fl::FeatureScaler scaler = fl::FeatureScaler::fit(split.train);
  std::vector<const fl::BorrowerHistory*> chunk;
  for (size_t i = 0; i < split.train.size() && i < 256; ++i) chunk.push_back(&split.train[i]);
  fl::ModelConfig mc;
  fl::Batch batch = fl::build_batch(chunk, mc.max_seq_len, scaler);
  fl::ModelParams params = fl::ModelParams::init(mc, 3);
  uint64_t seed = 0;
  for (auto _ : state) {
    fl::ForwardResult r = fl::forward(batch, params, fl::RunMode::train, ++seed);
    fl::Tensor loss = fl::label_loss(r.label_logits, r.y, r.domain);
    fl::backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(batch.lengths.size()));
}
BENCHMARK(BM_ForwardTrainStep)->Unit(benchmark::kMillisecond);

static void BM_GeneratePopulation(benchmark::State& state) {
  fl::GeneratorConfig gc;
  gc.n_borrowers = static_cast<int>(state.range(0));
  uint64_t seed = 0;
  for (auto _ : state) {
    gc.seed = ++seed;
    fl::DatasetSplit split = fl::generate_population(gc);
    benchmark::DoNotOptimize(split.train.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratePopulation)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_AucRoc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  fl::CounterRng rng(11);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    scores[i] = rng.normal() + labels[i];
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fl::auc_roc(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AucRoc)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
