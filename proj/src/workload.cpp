#include "skybatch/workload.hpp"

#include <algorithm>
#include <stdexcept>

#include "skybatch/errors.hpp"

namespace skybatch::workload {

MatchObject make_match_object(const htm::UnitVec& pos, double radius) {
    if (radius <= 0.0) {
        throw std::invalid_argument("match object radius must be > 0");
    }
    auto cover = htm::cover_circle(pos, radius, htm::HtmId::kMaxLevel);
    return {pos, radius, {cover.front().lo, cover.back().hi}};
}

std::vector<BucketItems> preprocess_query(const Query& q, std::uint32_t query_index,
                                          std::span<const htm::HtmRange> bucket_ranges) {
    std::vector<BucketItems> out;
    if (q.objects.empty()) {
        throw std::invalid_argument("query without objects");
    }

    // bucket_ranges are sorted and tile the id space; locate by lower bound
    // on the range his.
    auto bucket_of = [&](htm::HtmId id) -> std::size_t {
        auto it = std::lower_bound(bucket_ranges.begin(), bucket_ranges.end(), id,
                                   [](const htm::HtmRange& r, htm::HtmId v) { return r.hi < v; });
        return static_cast<std::size_t>(it - bucket_ranges.begin());
    };

    std::map<std::uint32_t, std::vector<WorkloadItem>> per_bucket;
    for (std::uint32_t oi = 0; oi < q.objects.size(); ++oi) {
        const MatchObject& obj = q.objects[oi];
        std::size_t first = bucket_of(obj.range.lo);
        std::size_t last = bucket_of(obj.range.hi);
        if (first >= bucket_ranges.size() || last >= bucket_ranges.size() ||
            !bucket_ranges[first].overlaps(obj.range)) {
            throw std::logic_error("preprocess_query: object range overlaps no bucket");
        }
        for (std::size_t b = first; b <= last; ++b) {
            per_bucket[static_cast<std::uint32_t>(b)].push_back(
                {q.query_id, query_index, oi, obj, q.arrival});
        }
    }

    out.reserve(per_bucket.size());
    for (auto& [bucket, items] : per_bucket) {
        out.push_back({bucket, std::move(items)});
    }
    return out;
}

WorkloadManager::WorkloadManager(std::uint32_t n_buckets, std::size_t max_items)
    : queues_(n_buckets), max_items_(max_items) {}

std::uint32_t WorkloadManager::register_query(std::uint64_t query_id, SimTime arrival) {
    auto index = static_cast<std::uint32_t>(trackers_.size());
    trackers_.push_back({query_id, arrival, 0, std::nullopt, {}});
    return index;
}

void WorkloadManager::enqueue(std::span<const BucketItems> batches) {
    std::size_t incoming = 0;
    for (const auto& b : batches) incoming += b.items.size();
    if (total_queued_ + incoming > max_items_) {
        throw SaturationError("workload queues full: " + std::to_string(total_queued_) +
                              " queued, " + std::to_string(incoming) + " incoming, ceiling " +
                              std::to_string(max_items_));
    }

    for (const auto& b : batches) {
        if (b.bucket_index >= queues_.size()) {
            throw std::invalid_argument("enqueue: bucket index out of range");
        }
        Queue& q = queues_[b.bucket_index];
        for (const auto& item : b.items) {
            if (item.query_index >= trackers_.size()) {
                throw std::invalid_argument("enqueue: unregistered query");
            }
            if (q.items.empty() || item.enqueue_time < q.oldest) {
                q.oldest = item.enqueue_time;
            }
            q.items.push_back(item);
            Tracker& t = trackers_[item.query_index];
            if (t.pending == 0 && !t.completion.has_value()) {
                incomplete_.insert({t.arrival, item.query_index});
            }
            ++t.pending;
            ++t.queued_per_bucket[b.bucket_index];
        }
        total_queued_ += b.items.size();
        items_enqueued_ += b.items.size();
    }
}

void WorkloadManager::check_bucket(std::uint32_t bucket) const {
    if (bucket >= queues_.size()) {
        throw std::invalid_argument("bucket index out of range");
    }
}

void WorkloadManager::note_removed(const WorkloadItem& item, std::uint32_t bucket) {
    Tracker& t = trackers_[item.query_index];
    auto it = t.queued_per_bucket.find(bucket);
    if (it != t.queued_per_bucket.end() && --(it->second) == 0) {
        t.queued_per_bucket.erase(it);
    }
}

std::vector<WorkloadItem> WorkloadManager::drain_bucket(std::uint32_t bucket) {
    check_bucket(bucket);
    Queue& q = queues_[bucket];
    if (q.items.empty()) {
        throw SchedError("drain of empty queue " + std::to_string(bucket));
    }
    std::vector<WorkloadItem> items = std::move(q.items);
    q.items.clear();
    total_queued_ -= items.size();
    for (const auto& item : items) note_removed(item, bucket);
    return items;
}

std::vector<WorkloadItem> WorkloadManager::drain_bucket_for_query(std::uint32_t bucket,
                                                                  std::uint32_t query_index) {
    check_bucket(bucket);
    Queue& q = queues_[bucket];
    if (q.items.empty()) {
        throw SchedError("drain of empty queue " + std::to_string(bucket));
    }
    std::vector<WorkloadItem> taken;
    std::vector<WorkloadItem> kept;
    kept.reserve(q.items.size());
    for (auto& item : q.items) {
        if (item.query_index == query_index) {
            taken.push_back(std::move(item));
        } else {
            kept.push_back(std::move(item));
        }
    }
    if (taken.empty()) {
        throw SchedError("no items of query in queue " + std::to_string(bucket));
    }
    q.items = std::move(kept);
    total_queued_ -= taken.size();
    for (const auto& item : taken) note_removed(item, bucket);
    if (!q.items.empty()) {
        q.oldest = q.items.front().enqueue_time;
        for (const auto& item : q.items) {
            q.oldest = std::min(q.oldest, item.enqueue_time);
        }
    }
    return taken;
}

SimTime WorkloadManager::age_us(std::uint32_t bucket, SimTime now) const {
    check_bucket(bucket);
    const Queue& q = queues_[bucket];
    if (q.items.empty()) {
        throw SchedError("age of empty queue " + std::to_string(bucket));
    }
    return now - q.oldest;
}

std::size_t WorkloadManager::queue_len(std::uint32_t bucket) const {
    check_bucket(bucket);
    return queues_[bucket].items.size();
}

SimTime WorkloadManager::oldest_enqueue(std::uint32_t bucket) const {
    check_bucket(bucket);
    if (queues_[bucket].items.empty()) {
        throw SchedError("oldest_enqueue of empty queue " + std::to_string(bucket));
    }
    return queues_[bucket].oldest;
}

std::size_t WorkloadManager::pending(std::uint32_t query_index) const {
    return trackers_.at(query_index).pending;
}

bool WorkloadManager::complete(std::uint32_t query_index) const {
    return trackers_.at(query_index).completion.has_value();
}

std::optional<SimTime> WorkloadManager::completion_time(std::uint32_t query_index) const {
    return trackers_.at(query_index).completion;
}

SimTime WorkloadManager::arrival(std::uint32_t query_index) const {
    return trackers_.at(query_index).arrival;
}

void WorkloadManager::resolve(std::uint32_t query_index, std::size_t count, SimTime when) {
    Tracker& t = trackers_.at(query_index);
    if (count > t.pending) {
        throw std::logic_error("resolve: more items than pending");
    }
    t.pending -= count;
    items_resolved_ += count;
    if (t.pending == 0) {
        if (t.completion.has_value()) {
            throw std::logic_error("resolve: completion already set");
        }
        t.completion = when;
        incomplete_.erase({t.arrival, query_index});
    }
}

std::optional<std::uint32_t> WorkloadManager::earliest_incomplete_query() const {
    if (incomplete_.empty()) return std::nullopt;
    return incomplete_.begin()->second;
}

std::optional<std::uint32_t> WorkloadManager::first_queued_bucket(
    std::uint32_t query_index) const {
    const Tracker& t = trackers_.at(query_index);
    if (t.queued_per_bucket.empty()) return std::nullopt;
    return t.queued_per_bucket.begin()->first;
}

} // namespace skybatch::workload
