// Serial reference vs OpenMP for each kernel. Run with OMP_NUM_THREADS set to
// the thread count of interest; on a single core the two should be close.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "eqalign/kernels.hpp"

using namespace eqalign;

namespace {

std::vector<BeoCoord> points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-kBound, kBound);
    std::vector<BeoCoord> out(n);
    for (auto& p : out) p = {u(g), u(g)};
    return out;
}

template <auto Fn>
void BM_softmin(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto xs = points(n, 1), ys = points(n, 2);
    std::vector<double> cost(n * n), logw(n, -std::log(static_cast<double>(n))), pot(n, 0.0), out(n);
    kernels::cost_matrix_serial(xs, ys, 1, cost);
    for (auto _ : state) {
        Fn(0.05, cost, n, n, logw, pot, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void BM_cost(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto xs = points(n, 1), ys = points(n, 2);
    std::vector<double> out(n * n);
    for (auto _ : state) {
        Fn(xs, ys, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void BM_kde(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto pts = points(n, 3);
    const std::size_t res = 32;
    std::vector<double> out(res * res);
    for (auto _ : state) {
        Fn(pts, 1.0, 1.0, true, res, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Fn>
void BM_sliced(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto xs = points(n, 4), ys = points(n, 5);
    const std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> angles(2000), out(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) angles[i] = std::numbers::pi * static_cast<double>(i) / 2000.0;
    for (auto _ : state) {
        Fn(xs, w, ys, w, angles, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_softmin<kernels::softmin_serial>)->Name("softmin/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_softmin<kernels::softmin_omp>)->Name("softmin/omp")->Arg(64)->Arg(512);
BENCHMARK(BM_cost<kernels::cost_matrix_serial>)->Name("cost_matrix/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_cost<kernels::cost_matrix_omp>)->Name("cost_matrix/omp")->Arg(64)->Arg(512);
BENCHMARK(BM_kde<kernels::kde_grid_serial>)->Name("kde_grid/serial")->Arg(11)->Arg(200);
BENCHMARK(BM_kde<kernels::kde_grid_omp>)->Name("kde_grid/omp")->Arg(11)->Arg(200);
BENCHMARK(BM_sliced<kernels::sliced_projections_serial>)->Name("sliced/serial")->Arg(11)->Arg(200);
BENCHMARK(BM_sliced<kernels::sliced_projections_omp>)->Name("sliced/omp")->Arg(11)->Arg(200);

BENCHMARK_MAIN();
