#include "skybatch/sim.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "skybatch/errors.hpp"
#include "skybatch/rng.hpp"

namespace skybatch::sim {

double batch_cost_ms(join::Strategy strategy, std::size_t batch_size, bool resident,
                     const CostModel& model) {
    double n = static_cast<double>(batch_size);
    double phi = resident ? 0.0 : 1.0;
    if (strategy == join::Strategy::Scan) {
        return model.costs.tb_ms * phi + model.costs.tm_ms * n;
    }
    return model.t_probe_ms() * n * phi + model.costs.tm_ms * n;
}

namespace {

enum EventKind : int { kArrival = 0, kBatchComplete = 1 };

struct Event {
    SimTime time;
    int kind; // arrivals sort before completions at the same tick
    std::uint64_t seq;
    std::uint32_t payload; // query index for arrivals

    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (kind != o.kind) return kind > o.kind;
        return seq > o.seq;
    }
};

struct InFlight {
    std::vector<workload::WorkloadItem> items;
    std::uint32_t bucket = 0;
};

} // namespace

SimMetrics run(const std::vector<workload::Query>& trace, const store::Manifest& manifest,
               const store::BucketCache::Loader& loader, const SimConfig& config,
               std::vector<DecisionRecord>* explain) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].arrival < trace[i - 1].arrival) {
            throw ConfigError("sim: trace not sorted by arrival time");
        }
    }

    const auto ranges = manifest.ranges();
    const bool no_share = config.policy.kind == sched::PolicyKind::NoShare;

    std::unordered_map<std::uint64_t, const workload::Query*> query_by_id;
    query_by_id.reserve(trace.size());
    for (const auto& q : trace) query_by_id.emplace(q.query_id, &q);

    workload::WorkloadManager mgr(static_cast<std::uint32_t>(ranges.size()),
                                  config.max_queue_items);
    store::BucketCache cache(config.cache_buckets, loader);
    sched::Policy policy = config.policy;

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
    std::uint64_t seq = 0;
    for (std::uint32_t i = 0; i < trace.size(); ++i) {
        events.push({trace[i].arrival, kArrival, seq++, i});
    }

    SimMetrics metrics;
    bool busy = false;
    InFlight in_flight;
    SimTime now = 0;
    SimTime last_event_time = 0;

    auto start_batch = [&](SimTime t) {
        sched::Decision decision = sched::next_bucket(policy, mgr, cache, t);

        std::vector<workload::WorkloadItem> items;
        if (no_share) {
            auto q = mgr.earliest_incomplete_query();
            items = mgr.drain_bucket_for_query(decision.bucket, *q);
        } else {
            items = mgr.drain_bucket(decision.bucket);
        }

        const bool resident = no_share ? false : cache.resident(decision.bucket);
        const auto strategy =
            join::choose_strategy(items.size(), config.model.bucket_capacity,
                                  config.model.threshold);
        const double cost = batch_cost_ms(strategy, items.size(), resident, config.model);

        std::shared_ptr<const store::Bucket> bucket =
            no_share ? loader(decision.bucket) : cache.fetch(decision.bucket).bucket;

        std::vector<join::MatchResult> results =
            strategy == join::Strategy::Scan ? join::sweep_join(*bucket, items)
                                             : join::index_join(*bucket, items);
        // route matches to their parent queries, applying each query's predicate
        for (auto& r : results) {
            auto it = query_by_id.find(r.query_id);
            if (it == query_by_id.end()) continue;
            std::vector<join::MatchResult> one;
            one.push_back(std::move(r));
            for (const auto& kept : join::apply_predicate(std::move(one), *it->second)) {
                metrics.total_matches += kept.matched.size();
            }
        }

        if (explain) {
            explain->push_back({t, decision.bucket, decision.score, strategy, items.size()});
        }
        ++metrics.batches;

        in_flight.items = std::move(items);
        in_flight.bucket = decision.bucket;
        busy = true;
        events.push({t + from_ms(cost), kBatchComplete, seq++, 0});
    };

    try {
        while (!events.empty()) {
            now = events.top().time;
            while (!events.empty() && events.top().time == now) {
                Event ev = events.top();
                events.pop();
                last_event_time = std::max(last_event_time, ev.time);
                if (ev.kind == kArrival) {
                    const workload::Query& q = trace[ev.payload];
                    auto qi = mgr.register_query(q.query_id, q.arrival);
                    auto batches = workload::preprocess_query(q, qi, ranges);
                    mgr.enqueue(batches);
                } else {
                    std::map<std::uint32_t, std::size_t> by_query;
                    for (const auto& item : in_flight.items) ++by_query[item.query_index];
                    for (auto [qx, count] : by_query) mgr.resolve(qx, count, now);
                    in_flight.items.clear();
                    busy = false;
                }
            }
            if (!busy && mgr.any_queued()) {
                start_batch(now);
            }
        }
    } catch (const SaturationError& e) {
        throw SaturationError(std::string(e.what()) + " at virtual time " +
                              std::to_string(to_ms(now)) + " ms");
    }

    metrics.items_enqueued = mgr.items_enqueued();
    metrics.items_resolved = mgr.items_resolved();
    metrics.cache_hit_rate = cache.hit_rate();
    metrics.makespan_ms = to_ms(last_event_time);

    double sum = 0.0, sum_sq = 0.0;
    for (std::uint32_t qx = 0; qx < mgr.query_count(); ++qx) {
        auto done = mgr.completion_time(qx);
        if (!done) continue;
        ++metrics.completed;
        double resp = to_ms(*done - mgr.arrival(qx));
        sum += resp;
        sum_sq += resp * resp;
    }
    if (metrics.completed > 0) {
        double n = static_cast<double>(metrics.completed);
        metrics.mean_response_ms = sum / n;
        metrics.var_response_ms2 =
            std::max(0.0, sum_sq / n - metrics.mean_response_ms * metrics.mean_response_ms);
    }
    if (metrics.makespan_ms > 0.0) {
        metrics.throughput_qps =
            static_cast<double>(metrics.completed) / (metrics.makespan_ms / 1000.0);
    }
    return metrics;
}

std::vector<workload::Query> resample_arrivals(std::vector<workload::Query> queries,
                                               double rate_qps, std::uint64_t seed) {
    if (rate_qps <= 0.0) {
        throw std::invalid_argument("resample_arrivals: rate must be > 0");
    }
    Rng rng(seed);
    double t_s = 0.0;
    for (auto& q : queries) {
        t_s += rng.exponential(rate_qps);
        q.arrival = from_ms(t_s * 1000.0);
    }
    return queries;
}

SweepResult sweep(const std::vector<workload::Query>& trace_template,
                  const store::Manifest& manifest, const store::BucketCache::Loader& loader,
                  std::span<const double> alphas, std::span<const double> rates,
                  std::span<const std::uint64_t> seeds, const SimConfig& base) {
    if (alphas.empty() || rates.empty() || seeds.empty()) {
        throw std::invalid_argument("sweep: empty grid");
    }

    SweepResult result;
    result.cells.resize(rates.size() * alphas.size() * seeds.size());

    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic) collapse(2)
    for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            for (std::size_t si = 0; si < seeds.size(); ++si) {
                std::size_t slot = (ri * alphas.size() + ai) * seeds.size() + si;
                try {
                    auto trace = resample_arrivals(trace_template, rates[ri], seeds[si]);
                    SimConfig cfg = base;
                    cfg.policy.kind = sched::PolicyKind::LifeRaft;
                    cfg.policy.alpha = alphas[ai];
                    SimMetrics m = run(trace, manifest, loader, cfg);
                    result.cells[slot] = {rates[ri], alphas[ai], seeds[si], m};
                } catch (...) {
#pragma omp critical
                    if (!first_error) first_error = std::current_exception();
                }
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        sched::TradeoffCurve curve;
        curve.rate_qps = rates[ri];
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            double tp = 0.0, resp = 0.0;
            for (std::size_t si = 0; si < seeds.size(); ++si) {
                const auto& cell =
                    result.cells[(ri * alphas.size() + ai) * seeds.size() + si];
                tp += cell.metrics.throughput_qps;
                resp += cell.metrics.mean_response_ms;
            }
            double n = static_cast<double>(seeds.size());
            curve.points.push_back({alphas[ai], tp / n, resp / n});
        }
        result.curves.push_back(std::move(curve));
    }
    return result;
}

} // namespace skybatch::sim
