#include "skybatch/htm.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace skybatch::htm {

namespace {

// Inclusive slack for the edge half-space tests. Testing children in index
// order with this slack makes the lowest-numbered child win on shared edges.
constexpr double kEdgeEps = 1e-15;

constexpr UnitVec kAxis[6] = {
    {0.0, 0.0, 1.0},  // +z
    {1.0, 0.0, 0.0},  // +x
    {0.0, 1.0, 0.0},  // +y
    {-1.0, 0.0, 0.0}, // -x
    {0.0, -1.0, 0.0}, // -y
    {0.0, 0.0, -1.0}, // -z
};

// Octahedral roots in id order 8..15: S0..S3 then N0..N3.
constexpr int kRootCorner[8][3] = {
    {1, 5, 2}, {2, 5, 3}, {3, 5, 4}, {4, 5, 1},
    {1, 0, 4}, {4, 0, 3}, {3, 0, 2}, {2, 0, 1},
};

double side(const UnitVec& a, const UnitVec& b, const UnitVec& p) {
    return a.cross(b).dot(p);
}

double min_side(const TrixelCorners& c, const UnitVec& p) {
    double s0 = side(c[0], c[1], p);
    double s1 = side(c[1], c[2], p);
    double s2 = side(c[2], c[0], p);
    return std::min(s0, std::min(s1, s2));
}

UnitVec midpoint(const UnitVec& a, const UnitVec& b) {
    return UnitVec{a.x + b.x, a.y + b.y, a.z + b.z}.normalized();
}

TrixelCorners root_corners(int root_index) {
    return {kAxis[kRootCorner[root_index][0]], kAxis[kRootCorner[root_index][1]],
            kAxis[kRootCorner[root_index][2]]};
}

TrixelCorners child_corners(const TrixelCorners& c, int which) {
    UnitVec w0 = midpoint(c[1], c[2]);
    UnitVec w1 = midpoint(c[0], c[2]);
    UnitVec w2 = midpoint(c[0], c[1]);
    switch (which) {
    case 0: return {c[0], w2, w1};
    case 1: return {c[1], w0, w2};
    case 2: return {c[2], w1, w0};
    default: return {w0, w1, w2};
    }
}

// Bounding cap of a trixel: circumcenter of the corner plane, opening angle
// to the farthest corner. The spherical triangle lies inside this cap.
struct Cap {
    UnitVec axis;
    double angle;
};

Cap bounding_cap(const TrixelCorners& c) {
    UnitVec d = UnitVec{c[1].x - c[0].x, c[1].y - c[0].y, c[1].z - c[0].z}
                    .cross({c[2].x - c[1].x, c[2].y - c[1].y, c[2].z - c[1].z});
    double n = d.norm();
    if (n == 0.0) {
        // degenerate triangle cannot arise from midpoint subdivision
        return {c[0], 0.0};
    }
    UnitVec axis{d.x / n, d.y / n, d.z / n};
    if (axis.dot(c[0]) < 0.0) {
        axis = {-axis.x, -axis.y, -axis.z};
    }
    double a = angular_distance(axis, c[0]);
    a = std::max(a, angular_distance(axis, c[1]));
    a = std::max(a, angular_distance(axis, c[2]));
    return {axis, a};
}

void require_unit(const UnitVec& p) {
    if (std::abs(p.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("htm: vector is not unit-norm");
    }
}

void require_level(int level) {
    if (level < 0 || level > HtmId::kMaxLevel) {
        throw std::invalid_argument("htm: level out of range 0..14");
    }
}

struct CoverState {
    UnitVec center;
    double radius;
    int level;
    std::vector<HtmRange> out;

    void emit(std::uint32_t lo, std::uint32_t hi) {
        // DFS visits trixels in ascending id order; merge adjacent on the fly.
        if (!out.empty() && out.back().hi.raw() + 1 >= lo) {
            if (out.back().hi.raw() < hi) out.back().hi = HtmId{hi};
            return;
        }
        out.push_back({HtmId{lo}, HtmId{hi}});
    }

    void visit(std::uint32_t id, int node_level, const TrixelCorners& corners) {
        Cap cap = bounding_cap(corners);
        double dist = angular_distance(center, cap.axis);
        if (dist > radius + cap.angle) {
            return; // cap provably misses the trixel's bounding cap
        }
        int shift = 2 * (level - node_level);
        if (dist + cap.angle <= radius) {
            // whole subtree inside the cap
            emit(id << shift, ((id + 1u) << shift) - 1u);
            return;
        }
        if (node_level == level) {
            emit(id, id);
            return;
        }
        for (int c = 0; c < 4; ++c) {
            visit((id << 2) | static_cast<std::uint32_t>(c), node_level + 1,
                  child_corners(corners, c));
        }
    }
};

} // namespace

double UnitVec::norm() const { return std::sqrt(x * x + y * y + z * z); }

UnitVec UnitVec::normalized() const {
    double n = norm();
    return {x / n, y / n, z / n};
}

double angular_distance(const UnitVec& a, const UnitVec& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

bool HtmId::valid() const {
    int w = std::bit_width(raw_);
    return w >= 4 && (w - 4) % 2 == 0 && (w - 4) / 2 <= kMaxLevel;
}

int HtmId::level() const { return (std::bit_width(raw_) - 4) / 2; }

HtmId point_to_htm(const UnitVec& p, int level) {
    require_unit(p);
    require_level(level);

    std::uint32_t id = 0;
    TrixelCorners cur{};
    // Roots are tested in id order; the inclusive test gives the first
    // (lowest-id) root that contains p. A fallback on the least-violated
    // root keeps the function total under floating-point edge noise.
    double best = -1.0;
    int best_root = 0;
    bool found = false;
    for (int r = 0; r < 8 && !found; ++r) {
        TrixelCorners c = root_corners(r);
        double m = min_side(c, p);
        if (m >= -kEdgeEps) {
            id = 8u + static_cast<std::uint32_t>(r);
            cur = c;
            found = true;
        } else if (m > best) {
            best = m;
            best_root = r;
        }
    }
    if (!found) {
        id = 8u + static_cast<std::uint32_t>(best_root);
        cur = root_corners(best_root);
    }

    for (int l = 0; l < level; ++l) {
        int chosen = -1;
        double child_best = -1.0;
        int child_best_idx = 0;
        TrixelCorners child_best_corners{};
        for (int c = 0; c < 4; ++c) {
            TrixelCorners cc = child_corners(cur, c);
            double m = min_side(cc, p);
            if (m >= -kEdgeEps) {
                chosen = c;
                cur = cc;
                break;
            }
            if (chosen < 0 && m > child_best) {
                child_best = m;
                child_best_idx = c;
                child_best_corners = cc;
            }
        }
        if (chosen < 0) {
            chosen = child_best_idx;
            cur = child_best_corners;
        }
        id = (id << 2) | static_cast<std::uint32_t>(chosen);
    }
    return HtmId{id};
}

TrixelCorners trixel_corners(HtmId t) {
    if (!t.valid()) {
        throw std::invalid_argument("htm: malformed trixel id");
    }
    int level = t.level();
    std::uint32_t raw = t.raw();
    int root = static_cast<int>(raw >> (2 * level)) - 8;
    TrixelCorners cur = root_corners(root);
    for (int l = level - 1; l >= 0; --l) {
        cur = child_corners(cur, static_cast<int>((raw >> (2 * l)) & 3u));
    }
    return cur;
}

std::vector<HtmRange> cover_circle(const UnitVec& center, double radius, int level) {
    require_unit(center);
    require_level(level);
    if (radius < 0.0 || radius > 3.14159265358979323846 + 1e-12) {
        throw std::invalid_argument("htm: radius outside [0, pi]");
    }

    if (radius == 0.0) {
        HtmId t = point_to_htm(center, level);
        return {{t, t}};
    }
    if (radius >= 3.14159265358979323846) {
        return {{HtmId{level_min_id(level)}, HtmId{level_max_id(level)}}};
    }

    CoverState st{center, radius, level, {}};
    for (int r = 0; r < 8; ++r) {
        st.visit(8u + static_cast<std::uint32_t>(r), 0, root_corners(r));
    }
    return std::move(st.out);
}

} // namespace skybatch::htm
