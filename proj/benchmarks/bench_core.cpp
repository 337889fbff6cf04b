#include <benchmark/benchmark.h>

#include "geln/cooccur.hpp"
#include "geln/dataset.hpp"
#include "geln/fusion.hpp"
#include "geln/graph.hpp"
#include "geln/metrics.hpp"
#include "geln/nn.hpp"
#include "geln/rng.hpp"

using namespace geln;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.gaussian() * scale;
  return m;
}

}  // namespace

static void BM_GcnForward(benchmark::State& state) {
  const std::size_t c = 24, d = 32, d1 = 64, out = 64;
  Rng rng(1);
  GcnParams gcn(d, d1, out, 7);
  const Matrix cm = random_matrix(rng, c, c, 0.3);
  const Matrix lf = random_matrix(rng, c, d);
  for (auto _ : state) {
    Matrix z = gcn_forward(lf, cm, gcn);
    benchmark::DoNotOptimize(z.data().data());
  }
}
BENCHMARK(BM_GcnForward);

static void BM_AucOvr(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> scores(n), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc_ovr(scores, labels));
  }
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_AucOvr)->Range(64, 16384)->Complexity();

static void BM_CountCooccurrence(benchmark::State& state) {
  SynthConfig cfg;
  cfg.schema = spc_schema();
  cfg.n_train = static_cast<std::size_t>(state.range(0));
  cfg.n_val = 0;
  cfg.n_test = 0;
  cfg.feature_dims = {4, 4};
  cfg.seed = 3;
  const Dataset ds = synth_generate(cfg);
  for (auto _ : state) {
    auto counts = count_cooccurrence(ds);
    benchmark::DoNotOptimize(counts.m.data());
  }
}
BENCHMARK(BM_CountCooccurrence)->Range(64, 4096);

static void BM_CategorySoftmaxCe(benchmark::State& state) {
  const auto layout = spc_schema().layout();
  Rng rng(4);
  const Matrix logits = random_matrix(rng, 32, layout.total, 2.0);
  Matrix targets(32, layout.total);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat)
      targets(i, layout.offsets[cat] + rng.index(layout.sizes[cat])) = 1.0;
  for (auto _ : state) {
    auto r = category_softmax_ce(logits, targets, layout);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_CategorySoftmaxCe);

static void BM_FusionTrainStep(benchmark::State& state) {
  const auto layout = spc_schema().layout();
  Rng rng(5);
  FusionConfig fc;  // defaults: 64-wide features, 128 hidden
  FusionModel model(fc, layout, 11);
  const Matrix clin = random_matrix(rng, 32, fc.clinical_dim);
  const Matrix derm = random_matrix(rng, 32, fc.dermoscopy_dim);
  Matrix targets(32, layout.total);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t cat = 0; cat < layout.num_categories(); ++cat)
      targets(i, layout.offsets[cat] + rng.index(layout.sizes[cat])) = 1.0;
  for (auto _ : state) {
    const auto acts = model.forward(clin, derm);
    model.zero_grad();
    benchmark::DoNotOptimize(model.loss_backward(acts, targets));
  }
}
BENCHMARK(BM_FusionTrainStep);

BENCHMARK_MAIN();
