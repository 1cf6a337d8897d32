#include <benchmark/benchmark.h>

#include "daedl/data.hpp"
#include "daedl/density.hpp"
#include "daedl/dirichlet.hpp"
#include "daedl/metrics.hpp"
#include "daedl/network.hpp"
#include "daedl/predict.hpp"
#include "daedl/rng.hpp"

namespace {

using namespace daedl;

ConcentrationVector random_alpha(Rng& rng, Eigen::Index C) {
  Eigen::VectorXd a(C);
  for (Eigen::Index c = 0; c < C; ++c) a[c] = rng.uniform(0.2, 30.0);
  return ConcentrationVector(std::move(a));
}

void BM_EdlLoss(benchmark::State& state) {
  Rng rng(1);
  const auto C = static_cast<Eigen::Index>(state.range(0));
  const ConcentrationVector alpha = random_alpha(rng, C);
  const OneHotLabel y = OneHotLabel::from_index(0, C);
  const LossConfig cfg{0.05};
  for (auto _ : state) {
    benchmark::DoNotOptimize(edl_loss(alpha, y, cfg));
  }
}
BENCHMARK(BM_EdlLoss)->Arg(2)->Arg(10)->Arg(100);

void BM_LossGradWrtLogits(benchmark::State& state) {
  Rng rng(2);
  const auto C = static_cast<Eigen::Index>(state.range(0));
  Eigen::VectorXd z(C);
  for (Eigen::Index c = 0; c < C; ++c) z[c] = rng.uniform(-3.0, 3.0);
  const OneHotLabel y = OneHotLabel::from_index(0, C);
  const LossConfig cfg{0.05};
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_grad_wrt_logits(z, y, cfg, 1.0));
  }
}
BENCHMARK(BM_LossGradWrtLogits)->Arg(2)->Arg(10)->Arg(100);

void BM_Forward(benchmark::State& state) {
  Rng rng(3);
  const auto width = static_cast<Eigen::Index>(state.range(0));
  EvidentialNetwork net = make_network(2, {width, width}, 2, Parameterization::exp, true, rng);
  const Eigen::Vector2d x(0.3, -0.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(net, x));
  }
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256);

void BM_SpectralNormalize(benchmark::State& state) {
  Rng rng(4);
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  DenseLayer layer;
  layer.W.resize(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) layer.W(r, c) = rng.normal();
  }
  layer.b = Eigen::VectorXd::Zero(dim);
  layer.u = Eigen::VectorXd::Ones(dim).normalized();
  for (auto _ : state) {
    benchmark::DoNotOptimize(spectral_normalize(layer, 1));
  }
}
BENCHMARK(BM_SpectralNormalize)->Arg(64)->Arg(256);

void BM_GdaLogDensity(benchmark::State& state) {
  Rng rng(5);
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  const Eigen::Index n = 400;
  Eigen::MatrixXd features(n, dim);
  Eigen::VectorXi labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 2);
    for (Eigen::Index d = 0; d < dim; ++d) features(i, d) = rng.normal() + labels[i];
  }
  const GdaModel model = GdaModel::fit(features, labels, 2);
  Eigen::VectorXd z(dim);
  for (Eigen::Index d = 0; d < dim; ++d) z[d] = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.log_density(z));
  }
}
BENCHMARK(BM_GdaLogDensity)->Arg(16)->Arg(64);

void BM_Auroc(benchmark::State& state) {
  Rng rng(6);
  const auto n = static_cast<std::size_t>(state.range(0));
  ScoredBinarySet set;
  for (std::size_t i = 0; i < n; ++i) {
    set.scores.push_back(rng.uniform());
    set.labels.push_back(i % 2 == 0 ? 1 : 0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(set));
  }
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_TrainEpoch(benchmark::State& state) {
  const LabeledDataset data = two_moons(512, 0.1, 9);
  const SplitResult parts = split(data, 0.8, 10);
  for (auto _ : state) {
    state.PauseTiming();
    Rng rng(11);
    EvidentialNetwork net = make_network(2, {64, 64}, 2, Parameterization::exp, true, rng);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    cfg.patience = 1;
    state.ResumeTiming();
    benchmark::DoNotOptimize(train(std::move(net), parts.train, parts.holdout, cfg));
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
