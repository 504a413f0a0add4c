#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "skybatch/htm.hpp"
#include "skybatch/vtime.hpp"

namespace skybatch::workload {

// A probe object: mean position, match radius, and the level-14 id envelope
// of its cover (the bounding range the coarse filter works with).
struct MatchObject {
    htm::UnitVec pos;
    double radius = 0.0; // radians, > 0
    htm::HtmRange range;
};

MatchObject make_match_object(const htm::UnitVec& pos, double radius);

struct Query {
    std::uint64_t query_id = 0;
    SimTime arrival = 0;
    std::vector<MatchObject> objects;
    std::string predicate = "pass";
};

struct WorkloadItem {
    std::uint64_t query_id = 0;
    std::uint32_t query_index = 0;  // dense index assigned at registration
    std::uint32_t object_index = 0; // probe surrogate within the query
    MatchObject object;
    SimTime enqueue_time = 0;
};

struct BucketItems {
    std::uint32_t bucket_index = 0;
    std::vector<WorkloadItem> items;
};

// One item per bucket whose range overlaps the object's range. Requires the
// ranges to tile the id space; an object overlapping nothing is an internal
// invariant violation.
std::vector<BucketItems> preprocess_query(const Query& q, std::uint32_t query_index,
                                          std::span<const htm::HtmRange> bucket_ranges);

// Per-bucket workload queues plus per-query completion tracking. Single
// logical writer; the read-only accessors see one coherent state.
class WorkloadManager {
public:
    WorkloadManager(std::uint32_t n_buckets, std::size_t max_items);

    std::uint32_t register_query(std::uint64_t query_id, SimTime arrival);

    // Extends the per-bucket queues and the owning queries' pending counts.
    // Throws SaturationError when the ceiling would be exceeded.
    void enqueue(std::span<const BucketItems> batches);

    // Removes and returns all items of a non-empty queue.
    std::vector<WorkloadItem> drain_bucket(std::uint32_t bucket);

    // Removes only one query's items (the no-sharing baseline drains this way).
    std::vector<WorkloadItem> drain_bucket_for_query(std::uint32_t bucket,
                                                     std::uint32_t query_index);

    // now - oldest enqueue time, in whole-ms resolution of SimTime.
    SimTime age_us(std::uint32_t bucket, SimTime now) const;
    double age_ms(std::uint32_t bucket, SimTime now) const {
        return to_ms(age_us(bucket, now));
    }

    std::size_t queue_len(std::uint32_t bucket) const;
    SimTime oldest_enqueue(std::uint32_t bucket) const;
    std::uint32_t bucket_count() const { return static_cast<std::uint32_t>(queues_.size()); }
    std::size_t total_queued() const { return total_queued_; }
    bool any_queued() const { return total_queued_ > 0; }

    // tracker
    std::uint32_t query_count() const { return static_cast<std::uint32_t>(trackers_.size()); }
    std::size_t pending(std::uint32_t query_index) const;
    bool complete(std::uint32_t query_index) const;
    std::optional<SimTime> completion_time(std::uint32_t query_index) const;
    SimTime arrival(std::uint32_t query_index) const;

    // Marks `count` of the query's items resolved at `when`; sets the
    // completion time exactly once, when the pending count reaches zero.
    void resolve(std::uint32_t query_index, std::size_t count, SimTime when);

    // Oldest-arrival query with unresolved items (ties by registration order).
    std::optional<std::uint32_t> earliest_incomplete_query() const;
    // Lowest-index bucket currently queueing items of the query.
    std::optional<std::uint32_t> first_queued_bucket(std::uint32_t query_index) const;

    std::uint64_t items_enqueued() const { return items_enqueued_; }
    std::uint64_t items_resolved() const { return items_resolved_; }

private:
    struct Queue {
        std::vector<WorkloadItem> items;
        SimTime oldest = 0; // valid only when items is non-empty
    };

    struct Tracker {
        std::uint64_t query_id = 0;
        SimTime arrival = 0;
        std::size_t pending = 0;
        std::optional<SimTime> completion;
        std::map<std::uint32_t, std::uint32_t> queued_per_bucket;
    };

    void check_bucket(std::uint32_t bucket) const;
    void note_removed(const WorkloadItem& item, std::uint32_t bucket);

    std::vector<Queue> queues_;
    std::vector<Tracker> trackers_;
    std::set<std::pair<SimTime, std::uint32_t>> incomplete_; // (arrival, index)
    std::size_t max_items_;
    std::size_t total_queued_ = 0;
    std::uint64_t items_enqueued_ = 0;
    std::uint64_t items_resolved_ = 0;
};

} // namespace skybatch::workload
