#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skybatch/bucket_cache.hpp"
#include "skybatch/vtime.hpp"
#include "skybatch/workload.hpp"

namespace skybatch::sched {

// Empirical cost constants: ms to read one bucket from disk, ms to match one
// object in memory.
struct CostConstants {
    double tb_ms = 1200.0;
    double tm_ms = 0.13;
};

// Objects consumed per ms if the bucket were serviced now:
//   len / (tb * phi + tm * len),  phi = 0 when resident else 1.
// Undefined for empty queues; callers must not ask.
double workload_throughput(std::size_t queue_len, bool resident, const CostConstants& c);

// Per-decision normalization scales for the aged score.
struct Eq2Norm {
    double u_max = 1.0;
    double a_max = 0.0;
};

// Blend of throughput and age weighted by the bias alpha. Without norm this
// is the verbatim mixed-unit form u*(1-alpha) + age*alpha; with norm both
// terms are scaled onto [0,1] first (a_max of zero drops the age term).
// Rankings at alpha 0 and 1 coincide in both modes.
double aged_throughput(double u_t, double age_ms, double alpha,
                       const std::optional<Eq2Norm>& norm = std::nullopt);

enum class PolicyKind { LifeRaft, RoundRobin, NoShare };

struct Policy {
    PolicyKind kind = PolicyKind::LifeRaft;
    double alpha = 0.0;       // LifeRaft bias
    bool normalize = true;    // LifeRaft: normalize the two Eq-2 terms
    CostConstants costs;      // LifeRaft: constants behind the u_t scores
    std::uint32_t rr_cursor = 0;
};

struct Decision {
    std::uint32_t bucket = 0;
    double score = 0.0; // aged throughput for LifeRaft; 0 for the baselines
};

// Picks the bucket to service next. LifeRaft: argmax aged score over
// non-empty queues (ties to the lower index). RoundRobin: next non-empty
// queue at or after the cursor, wrapping, cursor advancing past it. NoShare:
// lowest queued bucket of the earliest-arrived incomplete query.
Decision next_bucket(Policy& policy, const workload::WorkloadManager& mgr,
                     const store::BucketCache& cache, SimTime now);

struct TradeoffPoint {
    double alpha = 0.0;
    double throughput_qps = 0.0;
    double mean_response_ms = 0.0;
};

struct TradeoffCurve {
    double rate_qps = 0.0;
    std::vector<TradeoffPoint> points; // distinct alphas, ascending
};

// Among points keeping throughput >= (1 - tolerance) * best, the alpha with
// the lowest mean response; ties go to the larger alpha.
double select_alpha(const TradeoffCurve& curve, double tolerance);

void write_curve_csv(const std::filesystem::path& path, const TradeoffCurve& curve,
                     const std::vector<std::string>& header_lines);
TradeoffCurve read_curve_csv(const std::filesystem::path& path);

} // namespace skybatch::sched
