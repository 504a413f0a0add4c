#pragma once

#include <cstdint>
#include <vector>

#include "skybatch/htm.hpp"

namespace skybatch::store {

struct CatalogObject {
    std::uint64_t object_id = 0;
    htm::HtmId htm_id; // level 14
    htm::UnitVec pos;
};

// Deterministic per-object scalar in [14, 24), the synthetic attribute the
// band predicate filters on. Derived by hashing the object id so it needs no
// column in the bucket files.
double synthetic_magnitude(std::uint64_t object_id);

struct Bucket {
    std::uint32_t index = 0;
    htm::HtmRange range;
    std::vector<CatalogObject> objects; // ascending (htm_id, object_id)
};

// Sort by id and cut into equal-count buckets. All buckets except possibly
// the last hold exactly `capacity` objects; ranges tile the whole level-14
// id space (bucket 0 starts at the space minimum, the last ends at the
// maximum, and interior boundaries butt against the next bucket's first id).
std::vector<Bucket> partition_catalog(std::vector<CatalogObject> objects,
                                      std::size_t capacity);

} // namespace skybatch::store
