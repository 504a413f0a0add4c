#include "skybatch/bucket_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "skybatch/errors.hpp"

namespace skybatch::store {

namespace {

constexpr std::uint32_t kMagic = 0x54424B53; // "SBKT" little-endian
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 36;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& buf, double v) {
    put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

std::filesystem::path bucket_path(const std::filesystem::path& dir, std::uint32_t index) {
    return dir / ("bucket_" + std::to_string(index) + ".bin");
}

std::uint32_t crc_of(const std::vector<unsigned char>& buf, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(len)));
}

} // namespace

std::uint64_t Manifest::layout_hash() const {
    // FNV-1a over capacity and the bucket boundaries
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    };
    mix(capacity);
    mix(buckets.size());
    for (const auto& e : buckets) {
        mix(e.range.lo.raw());
        mix(e.range.hi.raw());
    }
    return h;
}

std::vector<htm::HtmRange> Manifest::ranges() const {
    std::vector<htm::HtmRange> out;
    out.reserve(buckets.size());
    for (const auto& e : buckets) out.push_back(e.range);
    return out;
}

Manifest write_buckets(const std::vector<Bucket>& buckets, std::size_t capacity,
                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    Manifest man;
    man.capacity = capacity;
    for (const auto& b : buckets) {
        std::vector<unsigned char> buf;
        buf.reserve(kHeaderBytes + b.objects.size() * kRecordBytes + 4);
        put_u32(buf, kMagic);
        put_u32(buf, kVersion);
        put_u64(buf, b.objects.size());
        for (const auto& o : b.objects) {
            put_u64(buf, o.object_id);
            put_u32(buf, o.htm_id.raw());
            put_f64(buf, o.pos.x);
            put_f64(buf, o.pos.y);
            put_f64(buf, o.pos.z);
        }
        put_u32(buf, crc_of(buf, buf.size()));

        auto path = bucket_path(dir, b.index);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw StorageError("cannot open for write: " + path.string());
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (!f) throw StorageError("write failed: " + path.string());

        man.buckets.push_back({b.range, b.objects.size()});
    }

    std::ofstream mf(dir / "manifest", std::ios::trunc);
    if (!mf) throw StorageError("cannot open manifest for write in " + dir.string());
    mf << "capacity " << man.capacity << "\n";
    mf << "buckets " << man.buckets.size() << "\n";
    for (std::size_t i = 0; i < man.buckets.size(); ++i) {
        mf << "bucket " << i << ' ' << man.buckets[i].range.lo.raw() << ' '
           << man.buckets[i].range.hi.raw() << ' ' << man.buckets[i].count << "\n";
    }
    if (!mf) throw StorageError("manifest write failed in " + dir.string());
    return man;
}

Manifest read_manifest(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest");
    if (!f) throw StorageError("missing manifest in " + dir.string());

    Manifest man;
    std::string key;
    std::size_t n_buckets = 0;
    if (!(f >> key >> man.capacity) || key != "capacity") {
        throw StorageError("malformed manifest (capacity) in " + dir.string());
    }
    if (!(f >> key >> n_buckets) || key != "buckets") {
        throw StorageError("malformed manifest (buckets) in " + dir.string());
    }
    for (std::size_t i = 0; i < n_buckets; ++i) {
        std::size_t idx = 0;
        std::uint32_t lo = 0, hi = 0;
        std::uint64_t count = 0;
        if (!(f >> key >> idx >> lo >> hi >> count) || key != "bucket" || idx != i) {
            throw StorageError("malformed manifest entry in " + dir.string());
        }
        man.buckets.push_back({{htm::HtmId{lo}, htm::HtmId{hi}}, count});
    }
    return man;
}

Bucket read_bucket(const std::filesystem::path& dir, const Manifest& manifest,
                   std::uint32_t index) {
    if (index >= manifest.buckets.size()) {
        throw std::invalid_argument("read_bucket: index out of range");
    }
    auto path = bucket_path(dir, index);
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StorageError("missing bucket file: " + path.string());

    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderBytes + 4) {
        throw StorageError("truncated bucket " + std::to_string(index));
    }
    if (get_u32(buf.data()) != kMagic || get_u32(buf.data() + 4) != kVersion) {
        throw StorageError("bad header in bucket " + std::to_string(index));
    }
    std::uint64_t count = get_u64(buf.data() + 8);
    if (buf.size() != kHeaderBytes + count * kRecordBytes + 4) {
        throw StorageError("size mismatch in bucket " + std::to_string(index));
    }
    std::uint32_t stored_crc = get_u32(buf.data() + buf.size() - 4);
    if (stored_crc != crc_of(buf, buf.size() - 4)) {
        throw StorageError("checksum mismatch in bucket " + std::to_string(index));
    }

    Bucket b;
    b.index = index;
    b.range = manifest.buckets[index].range;
    b.objects.reserve(count);
    const unsigned char* p = buf.data() + kHeaderBytes;
    for (std::uint64_t i = 0; i < count; ++i, p += kRecordBytes) {
        CatalogObject o;
        o.object_id = get_u64(p);
        o.htm_id = htm::HtmId{get_u32(p + 8)};
        o.pos = {get_f64(p + 12), get_f64(p + 20), get_f64(p + 28)};
        b.objects.push_back(o);
    }
    return b;
}

} // namespace skybatch::store
