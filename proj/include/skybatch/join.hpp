#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skybatch/catalog.hpp"
#include "skybatch/workload.hpp"

namespace skybatch::join {

enum class Strategy { Scan, Index };

// Index when the batch is under threshold * capacity, Scan otherwise
// (ties go to Scan).
Strategy choose_strategy(std::size_t batch_size, std::size_t bucket_capacity,
                         double threshold);

struct MatchResult {
    std::uint64_t query_id = 0;
    std::uint32_t object_index = 0;          // probe surrogate within the query
    std::vector<std::uint64_t> matched;      // catalog object ids, bucket scan order
};

// Merge the id-sorted bucket against the batch sorted by range start,
// keeping an active window of probes whose range spans the current id;
// candidates are refined by angular distance <= probe radius. Serial; the
// reference the parallel index path is checked against. Probes with no
// match produce no result entry.
std::vector<MatchResult> sweep_join(const store::Bucket& bucket,
                                    std::span<const workload::WorkloadItem> batch);

// Per-probe range search over the id-ordered bucket followed by the same
// refinement. Probes are independent, so the loop runs under OpenMP.
// Result multiset is identical to sweep_join.
std::vector<MatchResult> index_join(const store::Bucket& bucket,
                                    std::span<const workload::WorkloadItem> batch);

// Built-in predicate family: "pass" keeps everything; "band:<lo>:<hi>" keeps
// matches whose synthetic magnitude lies in [lo, hi). Unknown tags are a
// configuration error.
std::vector<MatchResult> apply_predicate(std::vector<MatchResult> results,
                                         const workload::Query& query);

} // namespace skybatch::join
