#include "skybatch/sched.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "skybatch/errors.hpp"

namespace skybatch::sched {

double workload_throughput(std::size_t queue_len, bool resident, const CostConstants& c) {
    double len = static_cast<double>(queue_len);
    double phi = resident ? 0.0 : 1.0;
    return len / (c.tb_ms * phi + c.tm_ms * len);
}

double aged_throughput(double u_t, double age_ms, double alpha,
                       const std::optional<Eq2Norm>& norm) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("aged_throughput: alpha outside [0,1]");
    }
    if (!norm) {
        return u_t * (1.0 - alpha) + age_ms * alpha;
    }
    if (norm->u_max <= 0.0) {
        throw std::invalid_argument("aged_throughput: u_max must be > 0");
    }
    if (norm->a_max < 0.0) {
        throw std::invalid_argument("aged_throughput: a_max must be >= 0");
    }
    double age_term = norm->a_max == 0.0 ? 0.0 : (age_ms / norm->a_max);
    return (u_t / norm->u_max) * (1.0 - alpha) + age_term * alpha;
}

namespace {

Decision pick_liferaft(const Policy& policy, const workload::WorkloadManager& mgr,
                       const store::BucketCache& cache, SimTime now) {
    const std::uint32_t n = mgr.bucket_count();
    std::vector<std::uint32_t> eligible;
    eligible.reserve(16);
    double u_max = 0.0;
    double a_max = 0.0;
    std::vector<double> u(n, 0.0);
    std::vector<double> age(n, 0.0);
    for (std::uint32_t b = 0; b < n; ++b) {
        std::size_t len = mgr.queue_len(b);
        if (len == 0) continue;
        eligible.push_back(b);
        u[b] = workload_throughput(len, cache.resident(b), policy.costs);
        age[b] = mgr.age_ms(b, now);
        u_max = std::max(u_max, u[b]);
        a_max = std::max(a_max, age[b]);
    }
    if (eligible.empty()) {
        throw SchedError("nothing to schedule");
    }
    std::optional<Eq2Norm> norm;
    if (policy.normalize) norm = Eq2Norm{u_max, a_max};

    Decision best{eligible.front(), -1.0};
    for (std::uint32_t b : eligible) {
        double score = aged_throughput(u[b], age[b], policy.alpha, norm);
        if (score > best.score) {
            best = {b, score};
        }
    }
    return best;
}

Decision pick_round_robin(Policy& policy, const workload::WorkloadManager& mgr) {
    const std::uint32_t n = mgr.bucket_count();
    for (std::uint32_t k = 0; k < n; ++k) {
        std::uint32_t b = (policy.rr_cursor + k) % n;
        if (mgr.queue_len(b) > 0) {
            policy.rr_cursor = (b + 1) % n;
            return {b, 0.0};
        }
    }
    throw SchedError("nothing to schedule");
}

Decision pick_no_share(const workload::WorkloadManager& mgr) {
    // With a single executor nothing is in flight at decision time, so the
    // earliest incomplete query always has queued items somewhere.
    auto q = mgr.earliest_incomplete_query();
    if (q) {
        if (auto b = mgr.first_queued_bucket(*q)) {
            return {*b, 0.0};
        }
    }
    throw SchedError("nothing to schedule");
}

} // namespace

Decision next_bucket(Policy& policy, const workload::WorkloadManager& mgr,
                     const store::BucketCache& cache, SimTime now) {
    if (!mgr.any_queued()) {
        throw SchedError("nothing to schedule");
    }
    switch (policy.kind) {
    case PolicyKind::LifeRaft:
        return pick_liferaft(policy, mgr, cache, now);
    case PolicyKind::RoundRobin:
        return pick_round_robin(policy, mgr);
    case PolicyKind::NoShare:
    default:
        return pick_no_share(mgr);
    }
}

double select_alpha(const TradeoffCurve& curve, double tolerance) {
    if (curve.points.empty()) {
        throw std::invalid_argument("select_alpha: empty curve");
    }
    if (tolerance < 0.0 || tolerance >= 1.0) {
        throw std::invalid_argument("select_alpha: tolerance outside [0,1)");
    }
    double best_throughput = 0.0;
    for (const auto& p : curve.points) {
        best_throughput = std::max(best_throughput, p.throughput_qps);
    }
    double floor = (1.0 - tolerance) * best_throughput;

    const TradeoffPoint* chosen = nullptr;
    for (const auto& p : curve.points) {
        if (p.throughput_qps < floor) continue;
        if (!chosen || p.mean_response_ms < chosen->mean_response_ms ||
            (p.mean_response_ms == chosen->mean_response_ms && p.alpha > chosen->alpha)) {
            chosen = &p;
        }
    }
    return chosen->alpha;
}

void write_curve_csv(const std::filesystem::path& path, const TradeoffCurve& curve,
                     const std::vector<std::string>& header_lines) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw StorageError("cannot open curve for write: " + path.string());
    for (const auto& line : header_lines) f << "# " << line << "\n";
    f << "alpha,throughput_qps,mean_response_ms\n";
    char buf[128];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", p.alpha, p.throughput_qps,
                      p.mean_response_ms);
        f << buf;
    }
    if (!f) throw StorageError("curve write failed: " + path.string());
}

TradeoffCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw StorageError("cannot open curve: " + path.string());
    TradeoffCurve curve;
    std::string line;
    bool saw_header = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') {
            auto pos = line.find("rate_qps=");
            if (pos != std::string::npos) {
                curve.rate_qps = std::stod(line.substr(pos + 9));
            }
            continue;
        }
        if (!saw_header) {
            if (line != "alpha,throughput_qps,mean_response_ms") {
                throw ConfigError("curve: unexpected column header '" + line + "'");
            }
            saw_header = true;
            continue;
        }
        TradeoffPoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.alpha, &p.throughput_qps,
                        &p.mean_response_ms) != 3) {
            throw ConfigError("curve: bad row '" + line + "'");
        }
        curve.points.push_back(p);
    }
    return curve;
}

} // namespace skybatch::sched
