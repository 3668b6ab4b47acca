#include <benchmark/benchmark.h>

#include <random>

#include "crystab/crystab.hpp"

using namespace crystab;

namespace {

const IonDensity& smooth() {
  static const IonDensity d = make_wai_smooth_density(0.1);
  return d;
}

BlochModel model_for(int M) { return BlochModel(minimize_ground_state(smooth(), 0.1, 1.0, make_basis(M)), smooth(), 1.0); }

}  // namespace

static void BM_GroundStateGaussian(benchmark::State& state) {
  const IonDensity d = make_gaussian_density(0.1, 0.05);
  const auto basis = make_basis(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(minimize_ground_state(d, 0.1, 1.0, basis).omega0);
}
BENCHMARK(BM_GroundStateGaussian)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_AssembleBlocks(benchmark::State& state) {
  const BlochModel model = model_for(static_cast<int>(state.range(0)));
  const Vec3 theta(1.1, 2.3, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(model.blocks(theta).B.data());
}
BENCHMARK(BM_AssembleBlocks)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_Coercivity(benchmark::State& state) {
  const BlochModel model = model_for(static_cast<int>(state.range(0)));
  const BlochBlocks b = model.blocks(Vec3(1.1, 2.3, 0.7));
  for (auto _ : state) benchmark::DoNotOptimize(coercivity(b).kappa);
}
BENCHMARK(BM_Coercivity)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_WienerMinEigenvalue(benchmark::State& state) {
  const IonDensity d = make_wai_product_density(0.1);
  const BlochParameter theta(Vec3(1.1, 2.3, 0.7));
  const int terms = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(wiener_min_eigenvalue(d, theta, terms));
}
BENCHMARK(BM_WienerMinEigenvalue)->Arg(4)->Arg(8)->Arg(16);

static void BM_PropagatorBuild(benchmark::State& state) {
  const BlochModel model = model_for(static_cast<int>(state.range(0)));
  const BlochBlocks b = model.blocks(Vec3(kPi, kPi, kPi));
  for (auto _ : state) benchmark::DoNotOptimize(Propagator::build(b).K().data());
}
BENCHMARK(BM_PropagatorBuild)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_PropagatorEvolve(benchmark::State& state) {
  const BlochModel model = model_for(2);
  const Propagator p = Propagator::build(model.blocks(Vec3(kPi, kPi, kPi)));
  const CVector y0 = CVector::Ones(p.dimension());
  for (auto _ : state) benchmark::DoNotOptimize(p.evolve(y0, 10.0).data());
}
BENCHMARK(BM_PropagatorEvolve)->Unit(benchmark::kMicrosecond);

static void BM_BlochRoundTrip(benchmark::State& state) {
  const auto basis = make_basis(2);
  std::mt19937_64 rng(1);
  const int L = static_cast<int>(state.range(0));
  SupercellState s = SupercellState::zero(L, basis);
  for (auto& c : s.cells) c = random_state(basis, rng);
  for (auto _ : state) benchmark::DoNotOptimize(bloch_reconstruct(bloch_decompose(s)).cells.data());
}
BENCHMARK(BM_BlochRoundTrip)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
