#include <benchmark/benchmark.h>

#include "attrsparse/adversarial.hpp"
#include "attrsparse/attribution.hpp"
#include "attrsparse/gini.hpp"
#include "attrsparse/rng.hpp"
#include "attrsparse/training.hpp"

using namespace attrsparse;

namespace {

Vector random_vec(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(d);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

static void BM_Gini(benchmark::State& state) {
  const Vector v = random_vec(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(gini_abs(v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gini)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNLogN);

static void BM_IgClosed(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const LinearModel m(random_vec(d, 2), Activation::sigmoid, 0.1);
  const Vector x = random_vec(d, 3), u(d, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(ig_true_class(m, x, 1, u));
}
BENCHMARK(BM_IgClosed)->Arg(57)->Arg(1024);

static void BM_IgNumeric(benchmark::State& state) {
  const LinearModel m(random_vec(57, 2), Activation::sigmoid, 0.1);
  const Vector x = random_vec(57, 3), u(57, 0.0);
  const auto steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ig_numeric(true_class_field(m, 1), x, u, steps));
}
BENCHMARK(BM_IgNumeric)->Arg(256)->Arg(4096);

// One epoch of linear training on a 57-feature synthetic task.
static void BM_TrainEpoch(benchmark::State& state) {
  const Dataset ds = generate_synthetic({random_vec(57, 4), Vector(57, 1.0), 0.5, 0.7, 5}, 4600);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.regime = state.range(0) ? Regime::adversarial : Regime::natural;
  cfg.epsilon = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds, LossSpec::logistic(), cfg));
  state.SetLabel(to_string(cfg.regime));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Pgd(benchmark::State& state) {
  const MlpModel m = MlpModel::init({64, 32, 1}, HiddenActivation::relu, 6);
  const Vector x = random_vec(64, 7);
  const PgdConfig cfg = PgdConfig::defaults_for(0.1);
  for (auto _ : state)
    benchmark::DoNotOptimize(pgd_perturbation(LossSpec::logistic(), m, x, 1, {0.1}, cfg));
}
BENCHMARK(BM_Pgd)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
