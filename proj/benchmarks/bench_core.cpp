#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "amli/hierarchy.hpp"
#include "amli/poly.hpp"
#include "amli/precond.hpp"
#include "amli/sparse.hpp"

using namespace amli;

namespace {

std::vector<double> random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = gauss(rng);
  return v;
}

void BM_spmv_poisson2d(benchmark::State& state) {
  int levels = static_cast<int>(state.range(0));
  ProblemStructure ps = gen_poisson(2, levels, 4);
  const CsrMatrix& a = ps.finest;
  std::vector<double> x = random_vector(a.rows(), 1), y(a.rows());
  for (auto _ : state) {
    spmv(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * a.nnz());
  state.counters["n"] = a.rows();
}
BENCHMARK(BM_spmv_poisson2d)->Arg(4)->Arg(5)->Arg(6);

void BM_best_q_build(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  SpectralInterval s = spectral_params(1.0, 4.0);
  for (auto _ : state) {
    MonomialPoly q = best_q(m, s);
    benchmark::DoNotOptimize(q.coeffs.data());
  }
}
BENCHMARK(BM_best_q_build)->Arg(2)->Arg(8)->Arg(16);

void BM_amli_apply(benchmark::State& state) {
  int levels = static_cast<int>(state.range(0));
  bool wcycle = state.range(1) != 0;
  ProblemStructure ps = gen_poisson(2, levels, 4);
  BuildOptions opts;
  CycleSpec cyc = wcycle ? CycleSpec::w_cycle(levels, PolyFamily::BestApprox)
                         : CycleSpec::v_cycle(levels, PolyFamily::BestApprox);
  Hierarchy h = build_hierarchy(ps, cyc, opts);
  AmliWorkspace ws;
  std::vector<double> d = random_vector(h.finest_n(), 2), v(h.finest_n());
  for (auto _ : state) {
    amli_apply(h, levels, d, v, ws);
    benchmark::DoNotOptimize(v.data());
  }
  state.counters["n"] = h.finest_n();
}
BENCHMARK(BM_amli_apply)->Args({4, 0})->Args({4, 1})->Args({5, 0})->Args({5, 1})->Args({6, 1});

void BM_pcg_solve(benchmark::State& state) {
  int levels = static_cast<int>(state.range(0));
  ProblemStructure ps = gen_poisson(2, levels, 4);
  BuildOptions opts;
  Hierarchy h = build_hierarchy(ps, CycleSpec::w_cycle(levels, PolyFamily::BestApprox), opts);
  std::vector<double> b(h.finest_n(), 1.0);
  AmliPrecond pc(h);
  for (auto _ : state) {
    SolveReport rep = pcg_solve(h.finest(), b, pc.op(), 1e-8, 200);
    benchmark::DoNotOptimize(rep.iterations);
  }
  state.counters["n"] = h.finest_n();
}
BENCHMARK(BM_pcg_solve)->Arg(4)->Arg(5);

void BM_lanczos_extreme_eigs(benchmark::State& state) {
  ProblemStructure ps = gen_poisson(2, 4, 4);
  const CsrMatrix& a = ps.finest;
  LinOp op = csr_op(a);
  for (auto _ : state) {
    EigEstimate e = extreme_eigs(op, a.rows(), 30);
    benchmark::DoNotOptimize(e.high);
  }
  state.counters["n"] = a.rows();
}
BENCHMARK(BM_lanczos_extreme_eigs);

}  // namespace

BENCHMARK_MAIN();
