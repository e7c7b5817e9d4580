#include <benchmark/benchmark.h>

#include <random>

#include "kgres/condition.hpp"
#include "kgres/profile.hpp"
#include "kgres/reduced.hpp"
#include "kgres/solver.hpp"

using namespace kgres;

namespace {

ReducedSystem dissipative_pair() {
  MassVector m({Rational(1), Rational(3)});
  CubicNonlinearity F(
      2, {CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}}),
          CubicNonlinearity::term(1, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dt}}),
          CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
          CubicNonlinearity::term(2, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
          CubicNonlinearity::term(2, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {2, Deriv::Dt}}),
          CubicNonlinearity::term(2, 1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}})});
  return ReducedSystem(std::move(m), std::move(F));
}

void BM_ResonanceTable(benchmark::State& state) {
  std::vector<Rational> masses;
  for (int k = 1; k <= state.range(0); ++k) masses.emplace_back(k, 2);
  MassVector m(masses);
  for (auto _ : state) {
    auto table = ResonanceTable::build(m);
    benchmark::DoNotOptimize(table);
  }
}
BENCHMARK(BM_ResonanceTable)->DenseRange(2, 6, 2);

void BM_EvalReduced(benchmark::State& state) {
  auto sys = dissipative_pair();
  HyperbolaPoint w(0.8);
  ComplexVec Y{Complex(0.3, -0.4), Complex(0.2, 0.7)};
  for (auto _ : state) {
    auto f = sys.eval_reduced(w, Y);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_EvalReduced);

void BM_ReducedOracle(benchmark::State& state) {
  auto sys = dissipative_pair();
  HyperbolaPoint w(0.8);
  ComplexVec Y{Complex(0.3, -0.4), Complex(0.2, 0.7)};
  for (auto _ : state) {
    auto f = reduced_oracle(sys, w, Y);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_ReducedOracle);

void BM_ConditionValue(benchmark::State& state) {
  auto sys = dissipative_pair();
  auto A = ConditionMatrix::diagonal({1.0, 9.0});
  HyperbolaPoint w(1.1);
  ComplexVec Y{Complex(0.6, 0.1), Complex(-0.2, 0.5)};
  for (auto _ : state) benchmark::DoNotOptimize(condition_value(A, sys, w, Y));
}
BENCHMARK(BM_ConditionValue);

void BM_SolverStep(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  Grid1D grid(60.0, M);
  MassVector m({Rational(1), Rational(3)});
  CubicNonlinearity F(
      2, {CubicNonlinearity::term(1, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
          CubicNonlinearity::term(2, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
  CauchyData data;
  data.epsilon = 0.05;
  data.support_radius = 1.0;
  data.components.assign(2, ComponentData{Shape::Bump, 1.0, Shape::Zero, 0.0});
  FieldState init = data.sample(grid);
  const double dt = 0.2 * grid.dx();
  for (auto _ : state) {
    EvolveOptions opt;
    opt.dt = dt;
    opt.t_final = init.t + 8.0 * dt;  // eight RK4 steps per iteration
    auto rec = evolve(m, F, init, grid, opt);
    benchmark::DoNotOptimize(rec.final_state.u[0]);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_SolverStep)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_ProfileOde(benchmark::State& state) {
  auto sys = dissipative_pair();
  WeightFunction chi;
  ComplexVec a0{Complex(0.5, 0.2), Complex(-0.1, 0.4)};
  auto taus = geometric_taus(4.0, 400.0, 1.05);
  for (auto _ : state) {
    auto traj = integrate_profile_ode(sys, chi, 0.3, a0, taus);
    benchmark::DoNotOptimize(traj.samples.back().alpha[0]);
  }
}
BENCHMARK(BM_ProfileOde);

}  // namespace

BENCHMARK_MAIN();
