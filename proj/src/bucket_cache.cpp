#include "skybatch/bucket_cache.hpp"

namespace skybatch::store {

BucketCache::FetchResult BucketCache::fetch(std::uint32_t index) {
    auto it = map_.find(index);
    if (it != map_.end()) {
        ++hits_;
        lru_.splice(lru_.begin(), lru_, it->second);
        return {it->second->second, true};
    }

    ++misses_;
    auto bucket = loader_(index);
    if (capacity_ == 0) {
        return {std::move(bucket), false};
    }
    if (map_.size() >= capacity_) {
        map_.erase(lru_.back().first);
        lru_.pop_back();
    }
    lru_.emplace_front(index, std::move(bucket));
    map_[index] = lru_.begin();
    return {lru_.front().second, false};
}

} // namespace skybatch::store
