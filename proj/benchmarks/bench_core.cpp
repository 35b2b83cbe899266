#include "sdeflow/determinant.hpp"
#include "sdeflow/gamma.hpp"
#include "sdeflow/integrator.hpp"
#include "sdeflow/moments.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace sdeflow;

namespace {

ModelSpec noisy_linear(int d) {
  std::vector<DiffusionKernel> noise;
  noise.push_back(DiffusionKernel::mean_reverting(0.3 * Mat::Identity(d, d), Mat::Zero(d, d)));
  return ModelSpec(d, InteractionKernel::linear(Mat::Identity(d, d)),
                   DiffusionFamily(std::move(noise)));
}

ModelSpec saturating(int d) {
  std::vector<DiffusionKernel> noise;
  noise.push_back(DiffusionKernel::mean_reverting(0.2 * Mat::Identity(d, d), 0.1 * Mat::Identity(d, d)));
  return ModelSpec(d, InteractionKernel::saturating(Mat::Identity(d, d), 0.4, 1.0),
                   DiffusionFamily(std::move(noise)));
}

std::vector<Vec> random_points(std::mt19937_64& rng, int d, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vec x(d);
    for (int k = 0; k < d; ++k) x(k) = u(rng);
    pts.push_back(x);
  }
  return pts;
}

// args: dimension, particles, tracked points
template <ModelSpec (*Make)(int)>
void BM_em_step(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto model = Make(d);
  std::mt19937_64 rng(1);
  FlowState s;
  s.ensemble = ParticleEnsemble(d, random_points(rng, d, static_cast<std::size_t>(state.range(1))));
  for (const auto& u : random_points(rng, d, static_cast<std::size_t>(state.range(2)))) {
    s.points.push_back(TrackedPoint::start(u));
  }
  NoiseStream noise(1, 0, d, 1, 1e-3);
  NoiseDraw draw;
  const FlowState initial = s;
  long step = 0;
  for (auto _ : state) {
    noise.next(draw);
    em_step(s, draw, model, 1e-3, step++);
    if (step % 1000 == 0) s = initial;
  }
  state.SetItemsProcessed(state.iterations() * (state.range(1) + state.range(2)));
}
BENCHMARK(BM_em_step<noisy_linear>)->Args({1, 64, 64})->Args({2, 64, 1024})->Args({3, 64, 4096});
BENCHMARK(BM_em_step<saturating>)->Args({1, 64, 64})->Args({2, 64, 1024});

void BM_gamma_empirical(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_points(rng, 2, n), b = random_points(rng, 2, n);
  for (auto _ : state) benchmark::DoNotOptimize(gamma_empirical(a, b).distance);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_gamma_empirical)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNCubed);

void BM_gamma_to_dirac(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = random_points(rng, 2, 256);
  const Vec y = Vec::Constant(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(gamma_to_dirac(a, y));
}
BENCHMARK(BM_gamma_to_dirac);

void BM_second_order_identity(benchmark::State& state) {
  Engine engine(4);
  const int d = static_cast<int>(state.range(0));
  const auto a = random_test_matrix(engine, d), b = random_test_matrix(engine, d);
  const auto method = state.range(1) ? HessianMethod::kSecondCofactor : HessianMethod::kFiniteDifference;
  for (auto _ : state) benchmark::DoNotOptimize(second_order_identity(a, b, method).lhs);
}
BENCHMARK(BM_second_order_identity)->ArgsProduct({{2, 3, 5}, {0, 1}});

void BM_identity_suite(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_identity_suite(5, 10).size());
}
BENCHMARK(BM_identity_suite)->Unit(benchmark::kMillisecond);

void BM_log_lp_moment(benchmark::State& state) {
  const int g = static_cast<int>(state.range(0));
  const auto density = DensityModel::bump(Vec::Zero(2), Vec::Ones(2));
  const auto grid = QuadratureGrid::midpoint(density.lo(), density.hi(), g);
  Snapshot snap;
  for (const auto& u : grid.nodes) snap.points.push_back(TrackedPoint::start(u));
  for (auto _ : state) benchmark::DoNotOptimize(log_lp_moment(snap, density, grid, 2.0));
}
BENCHMARK(BM_log_lp_moment)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
