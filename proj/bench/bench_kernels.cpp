// Serial reference vs OpenMP kernels on synthetic inputs of growing size.
#include <benchmark/benchmark.h>

#include "opalg/kernels.hpp"

using namespace opalg;

namespace {

struct GramInput {
  std::vector<Mat> coef, left_ops;
};

GramInput gram_input(int d) {
  std::mt19937_64 rng(7);
  GramInput in;
  const int m = 4;
  for (int i = 0; i < d; ++i) in.coef.push_back(random_matrix(m, d, rng));
  for (int q = 0; q < m; ++q) in.left_ops.push_back(random_matrix(d, d, rng));
  return in;
}

void BM_GramSerial(benchmark::State& st) {
  auto in = gram_input(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::fusion_gram_serial(in.coef, in.left_ops));
}

void BM_GramParallel(benchmark::State& st) {
  auto in = gram_input(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::fusion_gram_parallel(in.coef, in.left_ops));
}

struct PairInput {
  std::vector<Mat> ops;
  Mat vecs, proj;
};

PairInput pair_input(int r) {
  std::mt19937_64 rng(11);
  PairInput in;
  for (int s = 0; s < r; ++s) in.ops.push_back(random_matrix(r, r, rng));
  in.vecs = random_matrix(r, r, rng);
  in.proj = random_matrix(r, 4, rng);
  return in;
}

void BM_PairsSerial(benchmark::State& st) {
  auto in = pair_input(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::projected_pairs_serial(in.ops, in.vecs, in.proj));
}

void BM_PairsParallel(benchmark::State& st) {
  auto in = pair_input(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::projected_pairs_parallel(in.ops, in.vecs, in.proj));
}

struct SolveInput {
  std::vector<Mat> Bs;
  Mat U;
};

SolveInput solve_input(int r) {
  std::mt19937_64 rng(13);
  SolveInput in;
  for (int i = 0; i < 16; ++i) in.Bs.push_back(random_matrix(r, r, rng));
  in.U = random_matrix(r, r, rng).triangularView<Eigen::Upper>();
  in.U.diagonal().array() += cd(r, 0);
  return in;
}

void BM_SolveSerial(benchmark::State& st) {
  auto in = solve_input(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    auto Bs = in.Bs;
    kernels::solve_upper_right_serial(Bs, in.U);
    benchmark::DoNotOptimize(Bs);
  }
}

void BM_SolveParallel(benchmark::State& st) {
  auto in = solve_input(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    auto Bs = in.Bs;
    kernels::solve_upper_right_parallel(Bs, in.U);
    benchmark::DoNotOptimize(Bs);
  }
}

}  // namespace

BENCHMARK(BM_GramSerial)->Arg(4)->Arg(16)->Arg(32);
BENCHMARK(BM_GramParallel)->Arg(4)->Arg(16)->Arg(32);
BENCHMARK(BM_PairsSerial)->Arg(16)->Arg(64)->Arg(125);
BENCHMARK(BM_PairsParallel)->Arg(16)->Arg(64)->Arg(125);

BENCHMARK(BM_SolveSerial)->Arg(64)->Arg(216);
BENCHMARK(BM_SolveParallel)->Arg(64)->Arg(216);

BENCHMARK_MAIN();
