#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "skybatch/catalog.hpp"

namespace skybatch::store {

struct ManifestEntry {
    htm::HtmRange range;
    std::uint64_t count = 0;
};

// Text sidecar describing a bucket directory: capacity, bucket count, and
// per-bucket id ranges. The layout hash fingerprints the bucket boundaries
// so traces generated against one layout are rejected against another.
struct Manifest {
    std::size_t capacity = 0;
    std::vector<ManifestEntry> buckets;

    std::size_t bucket_count() const { return buckets.size(); }
    std::uint64_t layout_hash() const;
    std::vector<htm::HtmRange> ranges() const;
};

// One fixed-width little-endian file per bucket (36-byte records), a 16-byte
// header and a trailing CRC-32, plus the `manifest` text file.
Manifest write_buckets(const std::vector<Bucket>& buckets, std::size_t capacity,
                       const std::filesystem::path& dir);

Manifest read_manifest(const std::filesystem::path& dir);

Bucket read_bucket(const std::filesystem::path& dir, const Manifest& manifest,
                   std::uint32_t index);

} // namespace skybatch::store
