// Serial reference vs OpenMP kernels on frame-sized inputs.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ldw/filters.hpp"
#include "ldw/kernels.hpp"
#include "ldw/segmentation.hpp"

namespace {

ldw::PlaneF random_plane(int rows, int cols, std::uint64_t seed) {
    ldw::PlaneF p(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) p(r, c) = u(rng);
    return p;
}

const ldw::FilterBank& bank() {
    static const ldw::FilterBank b = ldw::make_bank(1.5);
    return b;
}

void BM_ConvolveSerial(benchmark::State& state) {
    const auto img = random_plane(450, 200, 1);
    for (auto _ : state) benchmark::DoNotOptimize(ldw::convolve_separable_serial(img, bank(), ldw::KernelId::G2x));
}

void BM_ConvolveParallel(benchmark::State& state) {
    const auto img = random_plane(450, 200, 1);
    for (auto _ : state) benchmark::DoNotOptimize(ldw::convolve_separable(img, bank(), ldw::KernelId::G2x));
}

ldw::kernels::GatherTable gather_table(size_t cells, size_t source, int per_cell) {
    ldw::kernels::GatherTable t;
    t.per_cell = per_cell;
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::uint32_t> idx(0, static_cast<std::uint32_t>(source - 1));
    for (size_t i = 0; i < cells * static_cast<size_t>(per_cell); ++i) {
        t.index.push_back(idx(rng));
        t.weight.push_back(1.0 / per_cell);
    }
    return t;
}

void BM_GatherSerial(benchmark::State& state) {
    const auto t = gather_table(90000, 375 * 1242, 16);
    std::vector<double> in(375 * 1242, 0.5), out(t.cells());
    for (auto _ : state) {
        ldw::kernels::serial::gather(in, t, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_GatherParallel(benchmark::State& state) {
    const auto t = gather_table(90000, 375 * 1242, 16);
    std::vector<double> in(375 * 1242, 0.5), out(t.cells());
    for (auto _ : state) {
        ldw::kernels::parallel::gather(in, t, out);
        benchmark::DoNotOptimize(out.data());
    }
}

std::vector<ldw::Feature> mixture_data(size_t n) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<ldw::Feature> data(n);
    for (size_t i = 0; i < n; ++i) {
        const double m = 4.0 * static_cast<double>(i % 3);
        data[i] = {m + g(rng), m + g(rng), m + g(rng)};
    }
    return data;
}

void run_em(benchmark::State& state, bool parallel) {
    const auto data = mixture_data(30000);
    const auto init = ldw::init_kmeans(data, 5);
    ldw::EmOptions opt;
    opt.max_iters = 10;
    opt.rel_tol = 0.0;
    opt.parallel = parallel;
    for (auto _ : state) benchmark::DoNotOptimize(ldw::em_refine(init, data, opt));
}

void BM_EmSerial(benchmark::State& state) { run_em(state, false); }
void BM_EmParallel(benchmark::State& state) { run_em(state, true); }

}  // namespace

BENCHMARK(BM_ConvolveSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvolveParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GatherSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GatherParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EmSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
