// Serial reference paths against the OpenMP kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "twoscale/catalogue.hpp"
#include "twoscale/cell_problem.hpp"
#include "twoscale/fine_scale.hpp"
#include "twoscale/two_scale.hpp"

namespace ts = twoscale;

namespace {

ts::TwoScaleCoefficient family(int dim) {
  if (dim == 1) return ts::TwoScaleCoefficient::uniform(1, {{ts::SeparableTerm::constant(1, 9.0)}}, ts::resolve_terms({"@u1"}, 1));
  return ts::TwoScaleCoefficient::uniform(2, {{ts::SeparableTerm::constant(2, 10.0)}}, ts::resolve_terms({"@u2"}, 2));
}

ts::ParameterVector parameter(std::size_t j) {
  std::vector<double> z(j);
  for (std::size_t i = 0; i < j; ++i) z[i] = (i % 2 ? -0.4 : 0.7) / (1.0 + static_cast<double>(i));
  return ts::ParameterVector(z);
}

ts::Execution exec_of(const benchmark::State& state) {
  return state.range(2) ? ts::Execution::parallel : ts::Execution::serial;
}

// Args: dim, level, parallel.
void BM_TwoScaleApply(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const ts::TwoScaleSpace space(dim, static_cast<int>(state.range(1)), ts::TensorMode::full);
  const auto coeff = family(dim);
  const ts::TwoScaleOperator op(space, coeff, parameter(coeff.size()), exec_of(state));
  std::vector<double> in(space.size(), 1.0), out(space.size());
  for (auto _ : state) {
    op.apply(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["dofs"] = static_cast<double>(space.size());
}
BENCHMARK(BM_TwoScaleApply)->Args({1, 8, 0})->Args({1, 8, 1})->Args({2, 3, 0})->Args({2, 3, 1})->Unit(benchmark::kMillisecond);

// Args: dim, cell level, parallel.
void BM_CellProblems(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto coeff = family(dim);
  ts::CellSolveOptions opt;
  opt.exec = exec_of(state);
  const ts::MacroGrid grid{dim, 4};
  for (auto _ : state) {
    auto cells = ts::solve_cell_problems(coeff, parameter(coeff.size()), grid, static_cast<int>(state.range(1)), opt);
    benchmark::DoNotOptimize(cells.max_residual());
  }
}
BENCHMARK(BM_CellProblems)->Args({1, 10, 0})->Args({1, 10, 1})->Args({2, 5, 0})->Args({2, 5, 1})->Unit(benchmark::kMillisecond);

// Args: unused, 1/eps, parallel.
void BM_EpsilonFem(benchmark::State& state) {
  const auto coeff = family(2);
  const ts::EpsilonProblem p{&coeff, parameter(coeff.size()), 1.0 / static_cast<double>(state.range(1)), 1.0, 8};
  for (auto _ : state) {
    auto sol = ts::solve_eps_fem(p, {1e-8, 100000}, exec_of(state));
    benchmark::DoNotOptimize(sol.nodal.data());
  }
}
BENCHMARK(BM_EpsilonFem)->Args({2, 8, 0})->Args({2, 8, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
