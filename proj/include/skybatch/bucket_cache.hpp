#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <unordered_map>

#include "skybatch/catalog.hpp"

namespace skybatch::store {

// LRU cache over immutable bucket snapshots. phi(i) in the throughput metric
// is 0 exactly when resident(i) is true. Single-owner mutable structure; the
// shared_ptr<const Bucket> handles it gives out may cross threads.
class BucketCache {
public:
    using Loader = std::function<std::shared_ptr<const Bucket>(std::uint32_t)>;

    struct FetchResult {
        std::shared_ptr<const Bucket> bucket;
        bool hit = false;
    };

    BucketCache(std::size_t capacity_buckets, Loader loader)
        : capacity_(capacity_buckets), loader_(std::move(loader)) {}

    // Hit: recency refreshed, no load. Miss: loads through the loader and
    // evicts the least recently used entry when full.
    FetchResult fetch(std::uint32_t index);

    bool resident(std::uint32_t index) const { return map_.contains(index); }

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    double hit_rate() const {
        std::uint64_t total = hits_ + misses_;
        return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
    }

private:
    using LruList = std::list<std::pair<std::uint32_t, std::shared_ptr<const Bucket>>>;

    std::size_t capacity_;
    Loader loader_;
    LruList lru_; // front = most recently used
    std::unordered_map<std::uint32_t, LruList::iterator> map_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
};

} // namespace skybatch::store
