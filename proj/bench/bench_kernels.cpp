// OpenMP kernels against their serial references. Worker count follows
// KAFLAB_THREADS.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "kaflab/analysis.hpp"
#include "kaflab/reference.hpp"

using namespace kaflab;

namespace {

struct Setup {
  GaussianKernel kernel{0.7};
  InputModel input{stationary_covariance(0.5, 0.5, 2)};
  Dictionary dictionary;

  explicit Setup(Index ppa)
      : dictionary(grid_dictionary(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0), ppa)) {}
};

const MomentModel& model(Index ppa) {
  static std::map<Index, MomentModel> cache;
  auto it = cache.find(ppa);
  if (it == cache.end()) {
    const Setup s(ppa);
    const Vector p = Vector::Constant(s.dictionary.size(), 0.01);
    it = cache.emplace(ppa, build_model(s.dictionary, s.kernel, s.input, p, 0.05)).first;
  }
  return it->second;
}

void BM_FourthTensor(benchmark::State& st) {
  const Setup s(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(fourth_tensor(s.dictionary, s.kernel, s.input));
}

void BM_FourthTensorReference(benchmark::State& st) {
  const Setup s(st.range(0));
  for (auto _ : st) {
    benchmark::DoNotOptimize(reference::fourth_tensor(s.dictionary, s.kernel, s.input));
  }
}

void BM_ContractMode(benchmark::State& st) {
  const MomentModel& m = model(st.range(0));
  const Matrix& w = m.gram.g_inv_sqrt.matrix();
  for (auto _ : st) benchmark::DoNotOptimize(contract_mode(m.s_tensor, 3, w));
}

void BM_ContractModeReference(benchmark::State& st) {
  const MomentModel& m = model(st.range(0));
  const Matrix& w = m.gram.g_inv_sqrt.matrix();
  for (auto _ : st) benchmark::DoNotOptimize(reference::contract_mode(m.s_tensor, 3, w));
}

Matrix spd(Index r) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(r, r);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  return a * a.transpose();
}

void BM_TTildeFull(benchmark::State& st) {
  const MomentModel& m = model(st.range(0));
  const Matrix c = spd(m.dim());
  for (auto _ : st) benchmark::DoNotOptimize(t_tilde(m, c));
}

void BM_TTildePacked(benchmark::State& st) {
  const MomentModel& m = model(st.range(0));
  const PackedContraction pc(m);
  const Matrix c = spd(m.dim());
  for (auto _ : st) benchmark::DoNotOptimize(pc.apply(c));
}

void BM_TTildeReference(benchmark::State& st) {
  const MomentModel& m = model(st.range(0));
  const Matrix c = spd(m.dim());
  for (auto _ : st) benchmark::DoNotOptimize(reference::t_tilde(m.s_tilde, c));
}

McSetup mc(const Setup& s, const GramFactor& gf) {
  McSetup setup;
  setup.input = {0.5, 0.5};
  setup.system = SystemKind::Polynomial;
  setup.noise_sigma = 0.05;
  setup.dictionary = &s.dictionary;
  setup.kernel = &s.kernel;
  setup.gram = &gf;
  setup.filter = {FilterKind::NaturalKlms, 0.075, 1, 1e-4};
  setup.seed = 1;
  return setup;
}

void BM_MonteCarlo(benchmark::State& st) {
  const Setup s(5);
  const GramFactor gf = gram(s.dictionary, s.kernel);
  const McSetup setup = mc(s, gf);
  for (auto _ : st) benchmark::DoNotOptimize(mc_learning_curve(setup, 32, st.range(0)));
}

void BM_MonteCarloReference(benchmark::State& st) {
  const Setup s(5);
  const GramFactor gf = gram(s.dictionary, s.kernel);
  const McSetup setup = mc(s, gf);
  for (auto _ : st) {
    benchmark::DoNotOptimize(reference::mc_learning_curve(setup, 32, st.range(0)));
  }
}

}  // namespace

BENCHMARK(BM_FourthTensor)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FourthTensorReference)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContractMode)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContractModeReference)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TTildeFull)->Arg(5)->Arg(6)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TTildePacked)->Arg(5)->Arg(6)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TTildeReference)->Arg(5)->Arg(6)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MonteCarlo)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloReference)->Arg(1000)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
