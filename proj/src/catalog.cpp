#include "skybatch/catalog.hpp"

#include <algorithm>
#include <stdexcept>

#include "skybatch/rng.hpp"

namespace skybatch::store {

double synthetic_magnitude(std::uint64_t object_id) {
    std::uint64_t s = object_id ^ 0x6d616773796e7468ULL;
    double u = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    return 14.0 + 10.0 * u;
}

std::vector<Bucket> partition_catalog(std::vector<CatalogObject> objects,
                                      std::size_t capacity) {
    if (objects.empty()) {
        throw std::invalid_argument("partition_catalog: empty catalog");
    }
    if (capacity < 1) {
        throw std::invalid_argument("partition_catalog: capacity must be >= 1");
    }

    std::sort(objects.begin(), objects.end(), [](const CatalogObject& a, const CatalogObject& b) {
        if (a.htm_id != b.htm_id) return a.htm_id < b.htm_id;
        return a.object_id < b.object_id;
    });

    const std::size_t n_buckets = (objects.size() + capacity - 1) / capacity;
    std::vector<Bucket> buckets;
    buckets.reserve(n_buckets);

    for (std::size_t i = 0; i < n_buckets; ++i) {
        Bucket b;
        b.index = static_cast<std::uint32_t>(i);
        auto first = objects.begin() + static_cast<std::ptrdiff_t>(i * capacity);
        auto last = (i + 1 == n_buckets)
                        ? objects.end()
                        : objects.begin() + static_cast<std::ptrdiff_t>((i + 1) * capacity);
        b.objects.assign(first, last);
        buckets.push_back(std::move(b));
    }

    // Boundaries: tile [level-14 min, level-14 max] without overlap. A cut
    // never moves, so a run of equal ids may straddle two buckets; the
    // degenerate case of a full-capacity run starting two buckets at the
    // same id cannot produce a valid range and is rejected.
    for (std::size_t i = 0; i < n_buckets; ++i) {
        std::uint32_t lo = (i == 0) ? htm::level_min_id(14)
                                    : buckets[i].objects.front().htm_id.raw();
        std::uint32_t hi = (i + 1 == n_buckets)
                               ? htm::level_max_id(14)
                               : buckets[i + 1].objects.front().htm_id.raw() - 1u;
        if (hi < lo) {
            throw std::invalid_argument(
                "partition_catalog: run of equal ids exceeds bucket capacity");
        }
        buckets[i].range = {htm::HtmId{lo}, htm::HtmId{hi}};
    }
    return buckets;
}

} // namespace skybatch::store
