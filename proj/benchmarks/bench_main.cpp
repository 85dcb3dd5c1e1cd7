#include <benchmark/benchmark.h>

#include "relcomp/binding.hpp"
#include "relcomp/dict_learning.hpp"
#include "relcomp/echo_analysis.hpp"
#include "relcomp/feature_space.hpp"
#include "relcomp/random.hpp"

using namespace relcomp;

static void BM_BindHrr(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(1);
  const Vector x = rng.normal_vector(n), y = rng.normal_vector(n);
  for (auto _ : state) benchmark::DoNotOptimize(bind_hrr(x, y));
  state.SetComplexityN(n);
}
BENCHMARK(BM_BindHrr)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNLogN);

static void BM_UnbindOuter(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(2);
  const Matrix r = bind_outer(rng.normal_vector(n), rng.normal_vector(n));
  const Vector y = rng.normal_vector(n);
  for (auto _ : state) benchmark::DoNotOptimize(unbind_outer(r, y));
}
BENCHMARK(BM_UnbindOuter)->Arg(64)->Arg(256)->Arg(1024);

static void BM_BindBinary(benchmark::State& state) {
  const Index n = state.range(0);
  const auto x = BinaryVector::random(n, 3), y = BinaryVector::random(n, 4);
  const auto p = random_permutation(n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(bind_binary(x, y, p));
}
BENCHMARK(BM_BindBinary)->Arg(256)->Arg(4096);

static void BM_Readback(benchmark::State& state) {
  const Index n = state.range(0);
  const auto dict = make_dictionary(n, 2 * n, DictionaryKind::gaussian_normalized, 6);
  Rng rng(7);
  const Vector x = encode(dict, sample_code(dict.count(), 0.01, Amplitude::constant(), rng));
  for (auto _ : state) benchmark::DoNotOptimize(readback(dict, x));
}
BENCHMARK(BM_Readback)->Arg(128)->Arg(512);

static void BM_Omp(benchmark::State& state) {
  const auto dict = make_dictionary(256, 512, DictionaryKind::gaussian_normalized, 8);
  Rng rng(9);
  const Vector x = encode(dict, sample_code(dict.count(), 0.01, Amplitude::constant(), rng));
  const OmpStop stop{state.range(0), 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(omp_sparse_code(dict.atoms(), x, stop));
}
BENCHMARK(BM_Omp)->Arg(4)->Arg(16);

static void BM_KsvdIteration(benchmark::State& state) {
  const auto dict = make_dictionary(64, 128, DictionaryKind::gaussian_normalized, 10);
  Rng rng(11);
  Matrix x(64, 2000);
  for (Index s = 0; s < x.cols(); ++s) x.col(s) = encode(dict, sample_code(dict.count(), 0.03, Amplitude::constant(), rng));
  KsvdOptions o;
  o.atom_count = 128;
  o.sparsity = 4;
  o.iterations = 1;
  o.seed = 12;
  for (auto _ : state) benchmark::DoNotOptimize(fit_dictionary_ksvd(x, o));
}
BENCHMARK(BM_KsvdIteration)->Unit(benchmark::kMillisecond);

static void BM_SaeEpoch(benchmark::State& state) {
  Rng rng(13);
  const Matrix x = rng.normal_matrix(64, 4096);
  SaeOptions o;
  o.width = 256;
  o.epochs = 1;
  o.seed = 14;
  for (auto _ : state) benchmark::DoNotOptimize(fit_dictionary_sae(x, o));
}
BENCHMARK(BM_SaeEpoch)->Unit(benchmark::kMillisecond);

static void BM_EchoDetect(benchmark::State& state) {
  const auto dict = make_dictionary(256, 32, DictionaryKind::gaussian_normalized, 15);
  const Matrix atoms = echo_extended_atoms(dict, haar_orthogonal(256, 16));
  for (auto _ : state) benchmark::DoNotOptimize(detect_echo_pairs(atoms, EchoOptions{}));
}
BENCHMARK(BM_EchoDetect)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
