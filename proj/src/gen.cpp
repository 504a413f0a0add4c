#include "skybatch/gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "skybatch/rng.hpp"

namespace skybatch::gen {

namespace {

htm::UnitVec random_sphere_point(Rng& rng) {
    double z = rng.uniform(-1.0, 1.0);
    double phi = rng.uniform(0.0, 2.0 * M_PI);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

// tangent-plane Gaussian scatter of angular scale sigma around u
htm::UnitVec perturb(const htm::UnitVec& u, double sigma, Rng& rng) {
    htm::UnitVec ref = std::abs(u.z) < 0.9 ? htm::UnitVec{0.0, 0.0, 1.0}
                                           : htm::UnitVec{1.0, 0.0, 0.0};
    htm::UnitVec e1 = u.cross(ref).normalized();
    htm::UnitVec e2 = u.cross(e1);
    double a = sigma * rng.normal();
    double b = sigma * rng.normal();
    return htm::UnitVec{u.x + a * e1.x + b * e2.x, u.y + a * e1.y + b * e2.y,
                        u.z + a * e1.z + b * e2.z}
        .normalized();
}

std::size_t sample_count(double u, std::size_t lo, std::size_t hi, double shape) {
    if (hi <= lo) return lo;
    double a = static_cast<double>(lo);
    double b = static_cast<double>(hi) + 1.0;
    double x = 0.0;
    if (shape == 0.0) {
        x = a + u * (b - a);
    } else if (std::abs(shape - 1.0) < 1e-12) {
        x = a * std::exp(u * std::log(b / a));
    } else {
        double p = 1.0 - shape;
        x = std::pow(u * (std::pow(b, p) - std::pow(a, p)) + std::pow(a, p), 1.0 / p);
    }
    auto n = static_cast<std::size_t>(x);
    return std::clamp(n, lo, hi);
}

struct Skeleton {
    std::size_t hotspot = 0;
    htm::UnitVec center;
    std::size_t n_objects = 0;
};

struct SkeletonDraws {
    double coin = 0.0;
    double hotspot_u = 0.0;
    double g1 = 0.0, g2 = 0.0;
    double count_u = 0.0;
};

// Zipf cumulative weights over hotspot ranks for one exponent.
std::vector<double> zipf_cumulative(std::size_t n, double exponent) {
    std::vector<double> cum(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        total += std::pow(static_cast<double>(k + 1), -exponent);
        cum[k] = total;
    }
    for (auto& c : cum) c /= total;
    return cum;
}

std::size_t pick_hotspot(const std::vector<double>& cum, double u) {
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

// The per-query random draws are fixed once per seed so that re-evaluating
// the skeleton under a different exponent replays the same randomness
// (common random numbers make the mass curve smooth for the bisection).
std::vector<SkeletonDraws> draw_skeletons(const TraceConfig& cfg) {
    Rng rng(cfg.seed ^ 0x736b656c65746f6eULL);
    std::vector<SkeletonDraws> draws(cfg.n_queries);
    for (auto& d : draws) {
        d.coin = rng.uniform();
        d.hotspot_u = rng.uniform();
        d.g1 = rng.normal();
        d.g2 = rng.normal();
        d.count_u = rng.uniform();
    }
    return draws;
}

std::vector<Skeleton> build_skeletons(const TraceConfig& cfg,
                                      std::span<const htm::UnitVec> hotspots,
                                      const std::vector<SkeletonDraws>& draws,
                                      double exponent) {
    auto cum = zipf_cumulative(hotspots.size(), exponent);
    std::vector<Skeleton> out(draws.size());
    std::size_t prev = 0;
    for (std::size_t q = 0; q < draws.size(); ++q) {
        const auto& d = draws[q];
        std::size_t h = pick_hotspot(cum, d.hotspot_u);
        if (q > 0 && d.coin < cfg.rho) h = prev; // temporal clustering
        prev = h;

        const htm::UnitVec& hc = hotspots[h];
        htm::UnitVec ref = std::abs(hc.z) < 0.9 ? htm::UnitVec{0.0, 0.0, 1.0}
                                                : htm::UnitVec{1.0, 0.0, 0.0};
        htm::UnitVec e1 = hc.cross(ref).normalized();
        htm::UnitVec e2 = hc.cross(e1);
        double a = cfg.hotspot_sigma * d.g1;
        double b = cfg.hotspot_sigma * d.g2;
        out[q].hotspot = h;
        out[q].center = htm::UnitVec{hc.x + a * e1.x + b * e2.x, hc.y + a * e1.y + b * e2.y,
                                     hc.z + a * e1.z + b * e2.z}
                            .normalized();
        out[q].n_objects = sample_count(d.count_u, cfg.objects_min, cfg.objects_max,
                                        cfg.objects_shape);
    }
    return out;
}

std::size_t bucket_of(std::span<const htm::HtmRange> ranges, htm::HtmId id) {
    auto it = std::lower_bound(ranges.begin(), ranges.end(), id,
                               [](const htm::HtmRange& r, htm::HtmId v) { return r.hi < v; });
    return static_cast<std::size_t>(it - ranges.begin());
}

struct ProxySkew {
    double top_mass = 0.0;
    double coverage = 0.0;
};

// Stand-in for the real per-bucket item tally that avoids materializing
// every probe: each query is represented by the first few objects of its own
// object stream (so the sample is exactly what materialize would draw),
// scaled up to the query's object count. `sampled` controls the per-query
// sample size; 0 collapses everything onto the query center (cheapest).
ProxySkew proxy_skew(const TraceConfig& cfg, const std::vector<Skeleton>& skeletons,
                     std::span<const htm::HtmRange> ranges, std::size_t k_top,
                     std::size_t sampled) {
    std::vector<double> mass(ranges.size(), 0.0);
    std::vector<std::set<std::uint32_t>> touched(ranges.size());
    double total = 0.0;
    for (std::size_t qi = 0; qi < skeletons.size(); ++qi) {
        const Skeleton& s = skeletons[qi];
        if (sampled == 0) {
            auto b = bucket_of(ranges, htm::point_to_htm(s.center, 14));
            if (b < mass.size()) {
                mass[b] += static_cast<double>(s.n_objects);
                total += static_cast<double>(s.n_objects);
                touched[b].insert(static_cast<std::uint32_t>(qi));
            }
            continue;
        }
        Rng rng(cfg.seed ^ (0x6f626a0000000000ULL + static_cast<std::uint64_t>(qi)));
        std::size_t m = std::min<std::size_t>(s.n_objects, sampled);
        double weight = static_cast<double>(s.n_objects) / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            double sigma = rng.uniform() < cfg.core_fraction ? cfg.object_sigma
                                                             : cfg.tail_sigma;
            htm::UnitVec pos = perturb(s.center, sigma, rng);
            rng.uniform(); // radius draw, keeps the stream aligned
            auto b = bucket_of(ranges, htm::point_to_htm(pos, 14));
            if (b < mass.size()) {
                mass[b] += weight;
                total += weight;
                touched[b].insert(static_cast<std::uint32_t>(qi));
            }
        }
    }
    ProxySkew out;
    if (total == 0.0) return out;

    std::vector<std::size_t> order(ranges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mass[a] != mass[b]) return mass[a] > mass[b];
        return a < b;
    });
    double top = 0.0;
    for (std::size_t i = 0; i < std::min(k_top, order.size()); ++i) top += mass[order[i]];
    out.top_mass = top / total;

    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (touched[a].size() != touched[b].size()) return touched[a].size() > touched[b].size();
        return a < b;
    });
    std::set<std::uint32_t> covered;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
        covered.insert(touched[order[i]].begin(), touched[order[i]].end());
    }
    out.coverage = static_cast<double>(covered.size()) / static_cast<double>(skeletons.size());
    return out;
}

std::vector<workload::Query> materialize(const TraceConfig& cfg,
                                         const std::vector<Skeleton>& skeletons) {
    std::vector<workload::Query> queries(skeletons.size());

    double log_rmin = std::log(cfg.radius_min);
    double log_rmax = std::log(cfg.radius_max);

#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(skeletons.size()); ++qi) {
        const Skeleton& s = skeletons[static_cast<std::size_t>(qi)];
        Rng rng(cfg.seed ^ (0x6f626a0000000000ULL + static_cast<std::uint64_t>(qi)));
        workload::Query q;
        q.query_id = static_cast<std::uint64_t>(qi);
        q.objects.reserve(s.n_objects);
        for (std::size_t i = 0; i < s.n_objects; ++i) {
            double sigma = rng.uniform() < cfg.core_fraction ? cfg.object_sigma
                                                             : cfg.tail_sigma;
            htm::UnitVec pos = perturb(s.center, sigma, rng);
            double radius = std::exp(rng.uniform(log_rmin, log_rmax));
            q.objects.push_back(workload::make_match_object(pos, radius));
        }
        queries[static_cast<std::size_t>(qi)] = std::move(q);
    }

    Rng arrivals(cfg.seed ^ 0x6172726976616c73ULL);
    double t_s = 0.0;
    for (auto& q : queries) {
        t_s += arrivals.exponential(cfg.rate_qps);
        q.arrival = from_ms(t_s * 1000.0);
    }
    return queries;
}

// Exact per-bucket tally over the materialized queries: one item per bucket
// whose range overlaps an object's envelope. (The test-side checker derives
// the same statistics through preprocess_query instead of this loop.)
SkewStats measure_skew(const std::vector<workload::Query>& queries,
                       std::span<const htm::HtmRange> ranges, std::size_t k_top) {
    std::vector<std::uint64_t> mass(ranges.size(), 0);
    std::vector<std::set<std::uint64_t>> touched(ranges.size());
    std::uint64_t total = 0;

    for (const auto& q : queries) {
        for (const auto& o : q.objects) {
            std::size_t first = bucket_of(ranges, o.range.lo);
            std::size_t last = bucket_of(ranges, o.range.hi);
            for (std::size_t b = first; b <= last && b < ranges.size(); ++b) {
                ++mass[b];
                ++total;
                touched[b].insert(q.query_id);
            }
        }
    }

    SkewStats stats;
    stats.top_bucket_count = k_top;
    stats.total_items = total;

    std::vector<std::uint64_t> sorted_mass = mass;
    std::sort(sorted_mass.begin(), sorted_mass.end(), std::greater<>());
    std::uint64_t top = 0;
    for (std::size_t i = 0; i < std::min(k_top, sorted_mass.size()); ++i) top += sorted_mass[i];
    stats.top2pct_mass = total == 0 ? 0.0 : static_cast<double>(top) / static_cast<double>(total);

    // top ten buckets by reuse (distinct querying queries)
    std::vector<std::size_t> order(ranges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (touched[a].size() != touched[b].size()) return touched[a].size() > touched[b].size();
        return a < b;
    });
    std::set<std::uint64_t> covered;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
        covered.insert(touched[order[i]].begin(), touched[order[i]].end());
    }
    stats.top10_query_coverage =
        queries.empty() ? 0.0
                        : static_cast<double>(covered.size()) / static_cast<double>(queries.size());
    return stats;
}

} // namespace

std::vector<store::CatalogObject> generate_catalog(const CatalogConfig& cfg) {
    if (cfg.n_objects == 0) {
        throw std::invalid_argument("generate_catalog: n_objects must be >= 1");
    }
    Rng rng(cfg.seed ^ 0x636174616c6f6721ULL);
    std::vector<store::CatalogObject> objects;
    objects.reserve(cfg.n_objects);
    for (std::size_t i = 0; i < cfg.n_objects; ++i) {
        store::CatalogObject o;
        o.object_id = i;
        o.pos = random_sphere_point(rng);
        o.htm_id = htm::point_to_htm(o.pos, 14);
        objects.push_back(o);
    }
    return objects;
}

std::string GenReport::to_text() const {
    std::ostringstream out;
    out << "skybatch generation report\n";
    out << "tuned_zipf_exponent " << tuned_exponent << "\n";
    out << "realized_rate_qps " << realized_rate_qps << "\n";
    out << "total_items " << stats.total_items << "\n";
    out << "top_bucket_count " << stats.top_bucket_count << "\n";
    out << "top2pct_mass " << stats.top2pct_mass << "\n";
    out << "top10_query_coverage " << stats.top10_query_coverage << "\n";
    if (warnings.empty()) {
        out << "warnings none\n";
    } else {
        for (const auto& w : warnings) out << "warning " << w << "\n";
    }
    return out.str();
}

TraceResult generate_trace(const TraceConfig& cfg, const store::Manifest& manifest) {
    if (cfg.n_queries == 0) {
        throw std::invalid_argument("generate_trace: n_queries must be >= 1");
    }
    if (cfg.hotspot_count == 0) {
        throw std::invalid_argument("generate_trace: hotspot_count must be >= 1");
    }
    if (cfg.rho < 0.0 || cfg.rho > 1.0) {
        throw std::invalid_argument("generate_trace: rho outside [0,1]");
    }
    if (manifest.buckets.empty()) {
        throw std::invalid_argument("generate_trace: empty bucket layout");
    }

    const auto ranges = manifest.ranges();
    const std::size_t k_top = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(0.02 * static_cast<double>(ranges.size()))));

    // A fixed pool of candidate hotspots; using a prefix of it lets the tuner
    // vary the effective hotspot count without redrawing positions.
    const std::size_t pool_size = std::max<std::size_t>(cfg.hotspot_count, 128);
    Rng hotspot_rng(cfg.seed ^ 0x686f7473706f7473ULL);
    std::vector<htm::UnitVec> pool;
    pool.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) {
        pool.push_back(random_sphere_point(hotspot_rng));
    }

    const auto draws = draw_skeletons(cfg);

    GenReport report;
    double exponent = cfg.zipf_exponent;
    std::size_t n_hotspots = cfg.hotspot_count;

    auto bisect_mass = [&](std::span<const htm::UnitVec> hs, int iters,
                           std::size_t sampled) {
        double lo = 0.05, hi = 6.0;
        for (int iter = 0; iter < iters; ++iter) {
            double mid = 0.5 * (lo + hi);
            double mass =
                proxy_skew(cfg, build_skeletons(cfg, hs, draws, mid), ranges, k_top, sampled)
                    .top_mass;
            if (mass < cfg.top_mass_target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    std::vector<workload::Query> queries;
    SkewStats stats;

    if (!cfg.tune_skew) {
        queries = materialize(
            cfg, build_skeletons(cfg, std::span(pool.data(), n_hotspots), draws, exponent));
        stats = measure_skew(queries, ranges, k_top);
    } else {
        // The exponent bisection controls the mass target; coverage has no
        // knob of its own, so the hotspot-prefix size doubles as one (more,
        // thinner hotspots usually pull coverage down, though the mass
        // retune feeds back). Rank prefix sizes by the sampled proxy, then
        // evaluate a few of them exactly and keep the best.
        const std::vector<std::size_t> ladder{16, 24, 32, 40, 48,  56, 64,
                                              72, 80, 88, 96, 112, 128};
        const double cov_mid = 0.5 * (cfg.coverage_band_lo + cfg.coverage_band_hi);
        // the sampled proxy undercounts a query's full footprint
        const double cov_goal = cov_mid - 0.03;

        std::vector<std::size_t> candidates{cfg.hotspot_count};
        for (std::size_t h : ladder) {
            if (h != cfg.hotspot_count && h <= pool_size) candidates.push_back(h);
        }

        struct Scored {
            std::size_t h;
            double e;
            double dist;
        };
        std::vector<Scored> scored;
        for (std::size_t h : candidates) {
            auto hs = std::span(pool.data(), h);
            double e = bisect_mass(hs, 14, 0);
            e = bisect_mass(hs, 12, 12);
            double cov =
                proxy_skew(cfg, build_skeletons(cfg, hs, draws, e), ranges, k_top, 12)
                    .coverage;
            scored.push_back({h, e, std::abs(cov - cov_goal)});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const Scored& a, const Scored& b) { return a.dist < b.dist; });

        auto in_band = [&](const SkewStats& s) {
            return std::abs(s.top2pct_mass - cfg.top_mass_target) <= cfg.top_mass_band &&
                   s.top10_query_coverage >= cfg.coverage_band_lo &&
                   s.top10_query_coverage <= cfg.coverage_band_hi;
        };
        auto penalty = [&](const SkewStats& s) {
            double p = 0.0;
            p += std::max(0.0, std::abs(s.top2pct_mass - cfg.top_mass_target) -
                                   cfg.top_mass_band);
            p += std::max(0.0, cfg.coverage_band_lo - s.top10_query_coverage);
            p += std::max(0.0, s.top10_query_coverage - cfg.coverage_band_hi);
            return p;
        };

        double best_penalty = 1e9;
        std::size_t best_h = scored.front().h;
        double best_e = scored.front().e;
        std::vector<workload::Query> best_queries;
        SkewStats best_stats;

        for (std::size_t k = 0; k < std::min<std::size_t>(4, scored.size()); ++k) {
            std::size_t h = scored[k].h;
            double e = bisect_mass(std::span(pool.data(), h), 22, 12);
            auto qs =
                materialize(cfg, build_skeletons(cfg, std::span(pool.data(), h), draws, e));
            SkewStats st = measure_skew(qs, ranges, k_top);
            // one exponent nudge if only the mass target missed
            if (std::abs(st.top2pct_mass - cfg.top_mass_target) > cfg.top_mass_band) {
                double e2 = e * (st.top2pct_mass < cfg.top_mass_target ? 1.18 : 0.85);
                auto qs2 = materialize(
                    cfg, build_skeletons(cfg, std::span(pool.data(), h), draws, e2));
                SkewStats st2 = measure_skew(qs2, ranges, k_top);
                if (penalty(st2) < penalty(st)) {
                    e = e2;
                    qs = std::move(qs2);
                    st = st2;
                }
            }
            if (penalty(st) < best_penalty) {
                best_penalty = penalty(st);
                best_h = h;
                best_e = e;
                best_queries = std::move(qs);
                best_stats = st;
            }
            // stop on a hit, or once within rounding distance of the band
            if (in_band(best_stats) || best_penalty < 0.005) break;
        }

        n_hotspots = best_h;
        exponent = best_e;
        queries = std::move(best_queries);
        stats = best_stats;
    }

    report.tuned_exponent = exponent;
    report.stats = stats;
    report.realized_rate_qps =
        queries.empty() || queries.back().arrival == 0
            ? 0.0
            : static_cast<double>(queries.size()) / (to_ms(queries.back().arrival) / 1000.0);

    char buf[160];
    if (std::abs(stats.top2pct_mass - cfg.top_mass_target) > cfg.top_mass_band) {
        std::snprintf(buf, sizeof(buf),
                      "top-2%% mass %.3f outside [%.2f, %.2f]; skew target infeasible "
                      "with this configuration",
                      stats.top2pct_mass, cfg.top_mass_target - cfg.top_mass_band,
                      cfg.top_mass_target + cfg.top_mass_band);
        report.warnings.push_back(buf);
    }
    if (stats.top10_query_coverage < cfg.coverage_band_lo ||
        stats.top10_query_coverage > cfg.coverage_band_hi) {
        std::snprintf(buf, sizeof(buf),
                      "top-10 bucket query coverage %.3f outside [%.2f, %.2f]",
                      stats.top10_query_coverage, cfg.coverage_band_lo, cfg.coverage_band_hi);
        report.warnings.push_back(buf);
    }

    return {std::move(queries), std::move(report)};
}

} // namespace skybatch::gen
