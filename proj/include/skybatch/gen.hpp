#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skybatch/bucket_io.hpp"
#include "skybatch/catalog.hpp"
#include "skybatch/workload.hpp"

namespace skybatch::gen {

struct CatalogConfig {
    std::uint64_t seed = 1;
    std::size_t n_objects = 256'000;
};

// Deterministic uniform-sphere catalog; ids are assigned in generation order.
std::vector<store::CatalogObject> generate_catalog(const CatalogConfig& cfg);

struct TraceConfig {
    std::uint64_t seed = 1;
    std::size_t n_queries = 2'000;

    // objects per query: discrete power law on [min, max], shape 0 = uniform
    std::size_t objects_min = 20;
    std::size_t objects_max = 500;
    double objects_shape = 1.2;

    // spatial skew: query centers cluster on Zipf-weighted hotspots
    std::size_t hotspot_count = 32;
    double zipf_exponent = 1.0; // starting point; tuned unless tune_skew = false
    bool tune_skew = true;
    double hotspot_sigma = 0.01; // scatter of query centers around their hotspot (rad)

    // two-scale probe scatter: most objects sit in a tight core around the
    // query center, the rest spread thinly over a wide halo (the halo items
    // are what makes a query depend on rarely-requested buckets)
    double object_sigma = 0.03; // core scatter (rad)
    double tail_sigma = 0.15;   // halo scatter (rad)
    double core_fraction = 0.7; // probability an object belongs to the core

    double rate_qps = 1.5; // exponential inter-arrivals

    // per-probe match radius, log-uniform (defaults ~1 to 12 arcsec)
    double radius_min = 5e-6;
    double radius_max = 6e-5;

    double rho = 0.5; // probability a query reuses the previous query's hotspot

    // skew targets the tuner bisects toward / the report checks against
    double top_mass_target = 0.50;            // share of items in the top 2% buckets
    double top_mass_band = 0.05;              // acceptable +/- around the target
    double coverage_band_lo = 0.55;           // top-10-bucket query coverage band
    double coverage_band_hi = 0.67;
};

struct SkewStats {
    std::size_t top_bucket_count = 0;   // max(1, round(0.02 * n_buckets))
    double top2pct_mass = 0.0;          // item share of the top buckets by mass
    double top10_query_coverage = 0.0;  // queries touching the top-10 reuse buckets
    std::uint64_t total_items = 0;
};

struct GenReport {
    SkewStats stats;
    double tuned_exponent = 0.0;
    double realized_rate_qps = 0.0;
    std::vector<std::string> warnings;

    std::string to_text() const;
};

struct TraceResult {
    std::vector<workload::Query> queries;
    GenReport report;
};

// Synthetic skewed trace against an existing bucket layout. The Zipf
// exponent is bisected until the top-2% bucket mass lands in the target
// band; missed targets are reported as warnings, never silently.
TraceResult generate_trace(const TraceConfig& cfg, const store::Manifest& manifest);

} // namespace skybatch::gen
