// Serial reference against the OpenMP path for the kernels that parallelize
// over independent indices. Arg 0 is serial, 1 parallel.
#include <benchmark/benchmark.h>

#include <cmath>

#include "couette/airy.hpp"
#include "couette/harness.hpp"
#include "couette/nonlinear.hpp"

using namespace couette;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void BM_AiryBatch(benchmark::State& st) {
  std::vector<cplx> z;
  for (int i = 0; i < 4096; ++i) z.push_back(std::polar(0.005 * i, 0.37 * i));
  for (auto _ : st) benchmark::DoNotOptimize(airy_batch(z, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * int64_t(z.size()));
}
BENCHMARK(BM_AiryBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LambdaSup(benchmark::State& st) {
  ResolventCase c;
  c.nu = 1e-4;
  c.k = 1;
  const ChebGrid g = build_grid(grid_order_for(c.nu, c.k));
  const DiffOps ops = build_diff_ops(g);
  auto f = [&](double lam) {
    ResolventCase cc = c;
    cc.lambda = lam;
    return ResolventMap(cc, g, ops).operator_norm(DataKind::l2, Output::w);
  };
  for (auto _ : st) benchmark::DoNotOptimize(sup_over_lambda(f, -1.5, 1.5, 41, 1e-3, exec_of(st)));
}
BENCHMARK(BM_LambdaSup)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_HomogeneousAiry(benchmark::State& st) {
  ResolventCase c;
  c.nu = 1e-5;
  c.k = 1;
  c.lambda = 0.3;
  c.bc = BoundaryCondition::non_slip;
  const ChebGrid g = build_grid(grid_order_for(c.nu, c.k));
  const DiffOps ops = build_diff_ops(g);
  for (auto _ : st) benchmark::DoNotOptimize(homogeneous_airy(c, g, ops, exec_of(st)));
}
BENCHMARK(BM_HomogeneousAiry)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NonlinearRhs(benchmark::State& st) {
  NonlinearCase c;
  c.nu = 1e-3;
  c.k_max = 16;
  c.exec = exec_of(st);
  const NonlinearModel m(c);
  PerturbationState s = m.initial_state(0.05);
  // populate every mode
  const NonlinearForcing f0 = m.nonlinear_rhs(s);
  s = m.advance(s, f0, nullptr);
  for (auto _ : st) {
    const auto vel = m.velocity(s);
    benchmark::DoNotOptimize(m.nonlinear_rhs(s, vel));
  }
}
BENCHMARK(BM_NonlinearRhs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NonlinearStep(benchmark::State& st) {
  NonlinearCase c;
  c.nu = 1e-3;
  c.k_max = 16;
  c.exec = exec_of(st);
  const NonlinearModel m(c);
  PerturbationState s = m.initial_state(0.05);
  NonlinearForcing prev = m.nonlinear_rhs(s);
  s = m.advance(s, prev, nullptr);
  for (auto _ : st) {
    NonlinearForcing now = m.nonlinear_rhs(s);
    s = m.advance(s, now, &prev);
    prev = std::move(now);
  }
}
BENCHMARK(BM_NonlinearStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NavierSweep(benchmark::State& st) {
  SweepSpec s;
  s.nu_values = {1e-2, 1e-3};
  s.k_values = {1, 2, 4};
  s.lambda_strategy = SweepSpec::LambdaStrategy::fixed_list;
  s.lambda_list = {-1.0, -0.5, 0.0, 0.5, 1.0};
  s.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(verify_navier_L2(s));
}
BENCHMARK(BM_NavierSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
