#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skybatch/bucket_cache.hpp"
#include "skybatch/bucket_io.hpp"
#include "skybatch/join.hpp"
#include "skybatch/sched.hpp"
#include "skybatch/workload.hpp"

namespace skybatch::sim {

// Batch cost model. Scan pays the bucket read (when non-resident) plus the
// per-object match cost. Index pays a per-probe I/O cost calibrated so the
// two strategies cost the same at the break-even batch size
// threshold * capacity: t_probe = t_b / (threshold * capacity).
struct CostModel {
    sched::CostConstants costs;
    double threshold = 0.03;
    std::size_t bucket_capacity = 1000;

    double t_probe_ms() const {
        return costs.tb_ms / (threshold * static_cast<double>(bucket_capacity));
    }
};

double batch_cost_ms(join::Strategy strategy, std::size_t batch_size, bool resident,
                     const CostModel& model);

struct SimConfig {
    sched::Policy policy;
    std::size_t cache_buckets = 20;
    CostModel model;
    std::size_t max_queue_items = 50'000'000; // queues assumed to fit in memory
};

struct SimMetrics {
    std::uint64_t completed = 0;
    double makespan_ms = 0.0;
    double throughput_qps = 0.0; // completed queries per makespan second
    double mean_response_ms = 0.0;
    double var_response_ms2 = 0.0; // population variance
    double cache_hit_rate = 0.0;
    std::uint64_t items_enqueued = 0;
    std::uint64_t items_resolved = 0;
    std::uint64_t total_matches = 0;
    std::uint64_t batches = 0;
};

struct DecisionRecord {
    SimTime time = 0;
    std::uint32_t bucket = 0;
    double score = 0.0;
    join::Strategy strategy = join::Strategy::Scan;
    std::size_t batch_size = 0;
};

// Deterministic virtual-clock event loop: arrivals are preprocessed and
// enqueued; a single join executor drains the scheduler's pick, is charged
// the modelled cost, and the batch is joined for real against the bucket
// data. Same-time events process arrivals first. NoShare bypasses the cache
// entirely (every access is charged as a miss and counted in no hit rate).
SimMetrics run(const std::vector<workload::Query>& trace, const store::Manifest& manifest,
               const store::BucketCache::Loader& loader, const SimConfig& config,
               std::vector<DecisionRecord>* explain = nullptr);

struct SweepCell {
    double rate_qps = 0.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    SimMetrics metrics;
};

struct SweepResult {
    std::vector<SweepCell> cells;            // rate-major, then alpha, then seed
    std::vector<sched::TradeoffCurve> curves; // one per rate, seed-averaged
};

// Rewrites the template's inter-arrival gaps as seeded exponential draws at
// each target rate (query bodies and order unchanged), runs every
// (rate, alpha, seed) cell, and averages metrics over seeds into one
// trade-off curve per rate. Cells are independent and run in parallel.
SweepResult sweep(const std::vector<workload::Query>& trace_template,
                  const store::Manifest& manifest, const store::BucketCache::Loader& loader,
                  std::span<const double> alphas, std::span<const double> rates,
                  std::span<const std::uint64_t> seeds, const SimConfig& base);

// The arrival-resampling used by sweep, exposed for tests and the CLI.
std::vector<workload::Query> resample_arrivals(std::vector<workload::Query> queries,
                                               double rate_qps, std::uint64_t seed);

} // namespace skybatch::sim
