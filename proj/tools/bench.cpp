// Benchmark for the data-parallel kernels against their serial references:
// per-probe index join (OpenMP) vs the serial plane-sweep merge, and the
// sweep grid run with one thread vs all threads. Wall-clock only; the
// simulated metrics are identical by construction.

#include <chrono>
#include <cstdio>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skybatch/gen.hpp"
#include "skybatch/join.hpp"
#include "skybatch/sim.hpp"

using namespace skybatch;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());

    // -- join kernels ------------------------------------------------------
    gen::CatalogConfig ccfg;
    ccfg.seed = 42;
    ccfg.n_objects = 40'000;
    auto catalog = gen::generate_catalog(ccfg);
    auto parts = store::partition_catalog(catalog, 40'000); // one big bucket
    const store::Bucket& bucket = parts.front();

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, bucket.objects.size() - 1);
    std::vector<workload::WorkloadItem> probes;
    for (std::size_t i = 0; i < 20'000; ++i) {
        workload::WorkloadItem item;
        item.query_id = i % 50;
        item.object_index = static_cast<std::uint32_t>(i);
        item.object = workload::make_match_object(bucket.objects[pick(rng)].pos, 2e-4);
        probes.push_back(item);
    }

    std::printf("join kernels, bucket of %zu objects:\n", bucket.objects.size());
    std::printf("%10s %14s %16s %16s %9s\n", "batch", "sweep (ms)", "index 1T (ms)",
                "index NT (ms)", "speedup");
    for (std::size_t batch : {200ul, 1'000ul, 5'000ul, 20'000ul}) {
        auto span = std::span(probes.data(), batch);

        auto t0 = Clock::now();
        auto a = join::sweep_join(bucket, span);
        double sweep_ms = ms_since(t0);

        set_threads(1);
        t0 = Clock::now();
        auto b = join::index_join(bucket, span);
        double index1_ms = ms_since(t0);

        set_threads(max_threads());
        t0 = Clock::now();
        auto c = join::index_join(bucket, span);
        double indexN_ms = ms_since(t0);

        if (a.size() != b.size() || b.size() != c.size()) {
            std::printf("result mismatch!\n");
            return 1;
        }
        std::printf("%10zu %14.2f %16.2f %16.2f %8.2fx\n", batch, sweep_ms, index1_ms,
                    indexN_ms, index1_ms / indexN_ms);
    }

    // -- sweep grid --------------------------------------------------------
    auto grid_catalog = gen::generate_catalog({1, 64'000});
    auto grid_parts = store::partition_catalog(grid_catalog, 1'000);
    store::Manifest man;
    man.capacity = 1'000;
    std::vector<std::shared_ptr<const store::Bucket>> buckets;
    for (auto& b : grid_parts) {
        man.buckets.push_back({b.range, b.objects.size()});
        buckets.push_back(std::make_shared<store::Bucket>(std::move(b)));
    }
    auto loader = [buckets](std::uint32_t i) { return buckets.at(i); };

    gen::TraceConfig tcfg;
    tcfg.seed = 1;
    tcfg.n_queries = 300;
    tcfg.objects_min = 10;
    tcfg.objects_max = 80;
    auto trace = gen::generate_trace(tcfg, man);

    std::vector<double> alphas{0.0, 0.5, 1.0};
    std::vector<double> rates{1.0, 4.0};
    std::vector<std::uint64_t> seeds{1, 2};
    sim::SimConfig base;
    base.model.bucket_capacity = 1'000;

    std::printf("\nsweep grid, %zu cells of %zu queries:\n",
                alphas.size() * rates.size() * seeds.size(), trace.queries.size());

    set_threads(1);
    auto t0 = Clock::now();
    auto serial = sim::sweep(trace.queries, man, loader, alphas, rates, seeds, base);
    double serial_ms = ms_since(t0);

    set_threads(max_threads());
    t0 = Clock::now();
    auto parallel = sim::sweep(trace.queries, man, loader, alphas, rates, seeds, base);
    double parallel_ms = ms_since(t0);

    for (std::size_t i = 0; i < serial.cells.size(); ++i) {
        if (serial.cells[i].metrics.throughput_qps !=
            parallel.cells[i].metrics.throughput_qps) {
            std::printf("sweep determinism violated at cell %zu!\n", i);
            return 1;
        }
    }
    std::printf("%10s %14.2f ms\n%10s %14.2f ms  (%.2fx, identical metrics)\n", "1 thread",
                serial_ms, "N threads", parallel_ms, serial_ms / parallel_ms);
    return 0;
}
