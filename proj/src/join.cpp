#include "skybatch/join.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "skybatch/errors.hpp"

namespace skybatch::join {

namespace {

void require_sorted(const store::Bucket& bucket) {
    bool sorted = std::is_sorted(
        bucket.objects.begin(), bucket.objects.end(),
        [](const store::CatalogObject& a, const store::CatalogObject& b) {
            return a.htm_id < b.htm_id;
        });
    if (!sorted) {
        throw std::logic_error("join: bucket objects not sorted by id");
    }
}

bool probe_matches(const workload::WorkloadItem& item, const store::CatalogObject& obj) {
    return htm::angular_distance(item.object.pos, obj.pos) <= item.object.radius;
}

// Collect per-item match lists into results ordered by (query_id,
// object_index, input position); duplicated items stay distinct.
std::vector<MatchResult> collect(std::span<const workload::WorkloadItem> batch,
                                 std::vector<std::vector<std::uint64_t>>& matched) {
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (batch[a].query_id != batch[b].query_id) {
            return batch[a].query_id < batch[b].query_id;
        }
        return batch[a].object_index < batch[b].object_index;
    });

    std::vector<MatchResult> out;
    for (std::size_t i : order) {
        if (matched[i].empty()) continue;
        out.push_back({batch[i].query_id, batch[i].object_index, std::move(matched[i])});
    }
    return out;
}

} // namespace

Strategy choose_strategy(std::size_t batch_size, std::size_t bucket_capacity,
                         double threshold) {
    if (bucket_capacity < 1) {
        throw std::invalid_argument("choose_strategy: capacity must be >= 1");
    }
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw std::invalid_argument("choose_strategy: threshold outside (0,1)");
    }
    return static_cast<double>(batch_size) < threshold * static_cast<double>(bucket_capacity)
               ? Strategy::Index
               : Strategy::Scan;
}

std::vector<MatchResult> sweep_join(const store::Bucket& bucket,
                                    std::span<const workload::WorkloadItem> batch) {
    require_sorted(bucket);

    std::vector<std::size_t> by_lo(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) by_lo[i] = i;
    std::sort(by_lo.begin(), by_lo.end(), [&](std::size_t a, std::size_t b) {
        if (batch[a].object.range.lo != batch[b].object.range.lo) {
            return batch[a].object.range.lo < batch[b].object.range.lo;
        }
        return a < b;
    });

    std::vector<std::vector<std::uint64_t>> matched(batch.size());
    std::vector<std::size_t> active;
    std::size_t next = 0;

    for (const auto& obj : bucket.objects) {
        while (next < by_lo.size() && batch[by_lo[next]].object.range.lo <= obj.htm_id) {
            active.push_back(by_lo[next]);
            ++next;
        }
        std::erase_if(active, [&](std::size_t i) {
            return batch[i].object.range.hi < obj.htm_id;
        });
        for (std::size_t i : active) {
            if (probe_matches(batch[i], obj)) {
                matched[i].push_back(obj.object_id);
            }
        }
    }
    return collect(batch, matched);
}

std::vector<MatchResult> index_join(const store::Bucket& bucket,
                                    std::span<const workload::WorkloadItem> batch) {
    require_sorted(bucket);

    const auto begin = bucket.objects.begin();
    const auto end = bucket.objects.end();
    std::vector<std::vector<std::uint64_t>> matched(batch.size());

#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch.size()); ++i) {
        const auto& item = batch[static_cast<std::size_t>(i)];
        auto lo = std::lower_bound(begin, end, item.object.range.lo,
                                   [](const store::CatalogObject& o, htm::HtmId v) {
                                       return o.htm_id < v;
                                   });
        for (auto it = lo; it != end && it->htm_id <= item.object.range.hi; ++it) {
            if (probe_matches(item, *it)) {
                matched[static_cast<std::size_t>(i)].push_back(it->object_id);
            }
        }
    }
    return collect(batch, matched);
}

std::vector<MatchResult> apply_predicate(std::vector<MatchResult> results,
                                         const workload::Query& query) {
    const std::string& tag = query.predicate;
    if (tag == "pass" || tag.empty()) {
        return results;
    }
    double lo = 0.0, hi = 0.0;
    if (std::sscanf(tag.c_str(), "band:%lf:%lf", &lo, &hi) != 2) {
        throw ConfigError("unknown predicate tag '" + tag + "'");
    }
    std::vector<MatchResult> out;
    out.reserve(results.size());
    for (auto& r : results) {
        std::erase_if(r.matched, [&](std::uint64_t id) {
            double m = store::synthetic_magnitude(id);
            return m < lo || m >= hi;
        });
        if (!r.matched.empty()) {
            out.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace skybatch::join
