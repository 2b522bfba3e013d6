// Timings of the main building blocks on the ellipse meshes.

#include "curvedhho/harness.hpp"

#include <benchmark/benchmark.h>

using namespace curvedhho;

namespace {

const Mesh& ellipse_mesh(std::size_t level)
{
    static std::vector<Mesh> cache;
    while (cache.size() <= level) cache.push_back(case_mesh(ellipse_case(), cache.size(), MeshMode::Curved));
    return cache[level];
}

// First element with a curved face.
ElementId curved_element(const Mesh& mesh)
{
    for (ElementId e = 0; e < mesh.num_elements(); ++e) {
        for (const FaceUse& u : mesh.element(e).faces) {
            if (!mesh.face(u.face).is_straight()) return e;
        }
    }
    return 0;
}

void BM_GaussLegendre(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(gauss_legendre(static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_GaussLegendre)->Arg(4)->Arg(30)->Arg(60);

void BM_ElementRule(benchmark::State& state)
{
    const Mesh& mesh = ellipse_mesh(1);
    const ElementId e = curved_element(mesh);
    const Rule1D gl = gauss_legendre(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(element_rule(mesh, e, gl, gl));
}
BENCHMARK(BM_ElementRule)->Arg(10)->Arg(30);

void BM_FaceSpace(benchmark::State& state)
{
    const Mesh& mesh = ellipse_mesh(1);
    FaceId f = 0;
    while (mesh.face(f).is_straight()) ++f;
    const EdgeRule rule = edge_rule(mesh.face(f), f, gauss_legendre(30));
    const int k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_face_space(mesh.face(f), f, k, rule));
}
BENCHMARK(BM_FaceSpace)->DenseRange(1, 5, 2);

void BM_LocalStiffness(benchmark::State& state)
{
    const Mesh& mesh = ellipse_mesh(1);
    const Discretization disc(mesh, static_cast<int>(state.range(0)));
    const ElementId e = curved_element(mesh);
    for (auto _ : state) benchmark::DoNotOptimize(local_stiffness(disc, e, Eigen::Matrix2d::Identity()));
}
BENCHMARK(BM_LocalStiffness)->DenseRange(1, 5, 2);

void BM_AssembleSolve(benchmark::State& state)
{
    const TestCase tc = ellipse_case();
    const Discretization disc(ellipse_mesh(static_cast<std::size_t>(state.range(0))), 2);
    const auto ops = build_local_operators(disc, tc.diffusion);
    for (auto _ : state) {
        const GlobalSystem sys = assemble(disc, ops, tc.source);
        benchmark::DoNotOptimize(solve(disc, ops, sys));
    }
    state.counters["elements"] = static_cast<double>(disc.mesh().num_elements());
}
BENCHMARK(BM_AssembleSolve)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
