#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

namespace skybatch::htm {

struct UnitVec {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double dot(const UnitVec& o) const { return x * o.x + y * o.y + z * o.z; }

    UnitVec cross(const UnitVec& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }

    double norm() const;
    UnitVec normalized() const;
};

// Great-circle separation in radians, arctangent form (stable at small angles).
double angular_distance(const UnitVec& a, const UnitVec& b);

// Trixel identifier. The 8 octahedral roots carry ids 8..15 and each level
// appends two child bits, so a level-L id occupies 4+2L bits with the leading
// bit set. Level 14 fills exactly 32 bits.
class HtmId {
public:
    static constexpr int kMaxLevel = 14;

    constexpr HtmId() = default;
    explicit constexpr HtmId(std::uint32_t raw) : raw_(raw) {}

    constexpr std::uint32_t raw() const { return raw_; }

    bool valid() const;
    int level() const;

    constexpr HtmId parent() const { return HtmId{raw_ >> 2}; }
    constexpr HtmId child(int which) const {
        return HtmId{(raw_ << 2) | static_cast<std::uint32_t>(which)};
    }

    friend constexpr auto operator<=>(const HtmId&, const HtmId&) = default;

private:
    std::uint32_t raw_ = 0;
};

// Smallest / largest id at a level; together they bound the id space the
// level's trixels tile.
constexpr std::uint32_t level_min_id(int level) {
    return 8u << (2 * level);
}
constexpr std::uint32_t level_max_id(int level) {
    return level_min_id(level) | (level_min_id(level) - 1u);
}

// Inclusive contiguous id interval [lo, hi] at a common level.
struct HtmRange {
    HtmId lo;
    HtmId hi;

    bool contains(HtmId id) const { return lo <= id && id <= hi; }
    bool overlaps(const HtmRange& o) const { return lo <= o.hi && o.lo <= hi; }

    friend constexpr auto operator<=>(const HtmRange&, const HtmRange&) = default;
};

using TrixelCorners = std::array<UnitVec, 3>;

// Trixel at `level` whose spherical triangle contains p. Points on shared
// edges resolve to the lowest-numbered containing child.
HtmId point_to_htm(const UnitVec& p, int level);

// The three corner unit vectors bounding trixel t, counterclockwise seen from
// outside the sphere.
TrixelCorners trixel_corners(HtmId t);

// Sorted, disjoint, non-adjacent ranges at `level` whose union covers every
// trixel intersecting the spherical cap (center, radius). Conservative: may
// over-cover, never under-covers.
std::vector<HtmRange> cover_circle(const UnitVec& center, double radius, int level);

} // namespace skybatch::htm
