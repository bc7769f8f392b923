// Serial reference vs OpenMP kernels. Argument 0 selects serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "blochhom/bloch.hpp"
#include "blochhom/linalg.hpp"
#include "blochhom/spde.hpp"

using namespace blochhom;

namespace {

Exec mode(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

CellProblem mathieu(int cutoff) {
  const int m = 4 * cutoff;
  return CellProblem(MatrixField::isotropic(PeriodicField::from_expression(Expression::parse("2 + cos(2*pi*y)"), 1, m)),
                     PeriodicField::from_expression(Expression::parse("2*cos(2*pi*y)"), 1, m), cutoff);
}

CellProblem anisotropic(int cutoff) {
  const int m = 64;
  auto f = [&](const char* e) { return PeriodicField::from_expression(Expression::parse(e), 2, m); };
  const auto s12 = f("0.2*cos(2*pi*(y1 - y2))");
  return CellProblem(MatrixField::from_entries(2, {f("2 + cos(2*pi*y1)"), s12, s12, f("1.5 + 0.5*sin(2*pi*y2)")}),
                     f("cos(2*pi*y1) + 0.5*cos(2*pi*y2)"), cutoff);
}

void BM_Assemble(benchmark::State& state) {
  const auto p = anisotropic(8);
  const Exec exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_cell_operator(p, Point(0.1, 0.2), exec));
}
BENCHMARK(BM_Assemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Jacobi(benchmark::State& state) {
  const auto p = mathieu(64);
  const CMatrix a = assemble_cell_operator(p, Point(0.1)).matrix;
  JacobiOptions opt;
  opt.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(a, opt));
}
BENCHMARK(BM_Jacobi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleBands(benchmark::State& state) {
  const auto p = mathieu(16);
  std::vector<Point> thetas;
  for (int i = 0; i < 16; ++i) thetas.emplace_back(i / 16.0);
  const Exec exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(sample_bands(p, thetas, 4, exec));
}
BENCHMARK(BM_SampleBands)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Ensemble(benchmark::State& state) {
  const MacroGrid grid{1, 512};
  const double eps = 1.0 / 16, dt = 1e-4;
  auto f = [](const char* e) { return PeriodicField::from_expression(Expression::parse(e), 1, 64); };
  const Coefficients coeffs{MatrixField::isotropic(f("1")), f("2*cos(2*pi*y)"),
                            TwoScaleField::from_expression(Expression::parse("0"), grid, 1, 64), f("cos(2*pi*y)")};
  const ImexStepper fine(build_fine_problem(coeffs, grid, eps).data, dt);
  MacroOperatorData eff = fine.data();
  for (auto& s : eff.sigma) s = Tensor2::identity(1);
  for (auto& q : eff.q) q = 0.0;
  const ImexStepper effective(eff, dt);
  const auto v0 = MacroField::from_expression(grid, Expression::parse("sin(pi*x)"));
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  const Exec exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(fine, effective, v0, v0, seeds, 200, {0.02}, exec));
}
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
