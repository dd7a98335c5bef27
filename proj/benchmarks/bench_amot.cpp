#include <benchmark/benchmark.h>

#include <memory>
#include <numeric>

#include "amot/adapt.hpp"
#include "amot/driver.hpp"

namespace {

using namespace amot;

std::shared_ptr<const Mesh> uniform(int n) {
  return std::make_shared<const Mesh>(build_uniform(n));
}

void BM_assemble_stiffness(benchmark::State& state) {
  const auto mesh = uniform(static_cast<int>(state.range(0)));
  const ModelParams params{0.01, 10.0};
  const VelocityField field = VelocityField::sheering();
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_stiffness(*mesh, params, field));
  }
  state.SetItemsProcessed(state.iterations() * mesh->num_triangles());
}
BENCHMARK(BM_assemble_stiffness)->Arg(16)->Arg(32)->Arg(64);

void BM_matvec(benchmark::State& state) {
  const auto mesh = uniform(static_cast<int>(state.range(0)));
  const BlockCsrMatrix a =
      assemble_stiffness(*mesh, ModelParams{0.01, 10.0}, VelocityField::sheering());
  std::vector<double> x(a.rows(), 1.0), y(a.rows());
  for (auto _ : state) {
    a.matvec(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * a.num_blocks() * 9);
}
BENCHMARK(BM_matvec)->Arg(16)->Arg(32)->Arg(64);

void BM_stage_solve(benchmark::State& state) {
  const auto mesh = uniform(static_cast<int>(state.range(0)));
  const ModelParams params{0.01, 10.0};
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const BlockCsrMatrix A = assemble_stiffness(*mesh, params, VelocityField::sheering());
  DgFunction u(mesh, 0.3);
  BlockCsrMatrix S = assemble_jacobian(u, A, NonlinearReaction::allen_cahn(params.epsilon));
  S.scale(-1.0);
  S.add_scaled(M, 1.0 / (0.4359 * 1e-3));
  const BlockJacobiBicgstab solver(S, {1e-10, 2000});
  const auto b = M.matvec(std::vector<double>(M.rows(), 1.0));
  std::vector<double> x;
  for (auto _ : state) {
    const SolveStatus st = solver.solve(b, x);
    benchmark::DoNotOptimize(st.iterations);
  }
}
BENCHMARK(BM_stage_solve)->Arg(16)->Arg(32)->Arg(64);

void BM_rosenbrock_step(benchmark::State& state) {
  const auto mesh = uniform(static_cast<int>(state.range(0)));
  const ModelParams params{0.01, 10.0};
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const BlockCsrMatrix A = assemble_stiffness(*mesh, params, VelocityField::sheering());
  const NonlinearReaction reaction = NonlinearReaction::allen_cahn(params.epsilon);
  const Ros3pTableau tab = default_tableau();
  const DgFunction u = project(mesh, [](Vec2 p) { return 0.5 + 0.4 * p.x * p.y; });
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(tab, u, 1e-3, M, A, reaction));
  }
}
BENCHMARK(BM_rosenbrock_step)->Arg(16)->Arg(32);

void BM_refine_all(benchmark::State& state) {
  const auto mesh = uniform(static_cast<int>(state.range(0)));
  std::vector<int> all(mesh->num_triangles());
  std::iota(all.begin(), all.end(), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(refine(*mesh, all));
  }
  state.SetItemsProcessed(state.iterations() * mesh->num_triangles());
}
BENCHMARK(BM_refine_all)->Arg(32)->Arg(64);

void BM_residual_indicator(benchmark::State& state) {
  const auto mesh = uniform(static_cast<int>(state.range(0)));
  const ModelParams params{0.01, 10.0};
  const VelocityField field = VelocityField::sheering();
  const DgFunction u = project(mesh, [](Vec2 p) { return 0.5 + 0.4 * p.x - 0.2 * p.y; });
  const DgFunction v = project(mesh, [](Vec2 p) { return 0.5 + 0.38 * p.x - 0.21 * p.y; });
  for (auto _ : state) {
    benchmark::DoNotOptimize(residual_indicator(u, v, 1e-3, params, field));
  }
  state.SetItemsProcessed(state.iterations() * mesh->num_triangles());
}
BENCHMARK(BM_residual_indicator)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
