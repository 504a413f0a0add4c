#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "skybatch/errors.hpp"
#include "skybatch/sim.hpp"
#include "testutil.hpp"

using namespace skybatch;
using namespace skybatch::sim;

namespace {

struct World {
    std::vector<std::shared_ptr<const store::Bucket>> buckets;
    store::Manifest manifest;

    store::BucketCache::Loader loader() const {
        auto copy = buckets;
        return [copy](std::uint32_t index) { return copy.at(index); };
    }
};

World make_world(std::mt19937_64& rng, std::size_t n_objects, std::size_t capacity) {
    std::vector<store::CatalogObject> objects;
    for (std::size_t i = 0; i < n_objects; ++i) {
        store::CatalogObject o;
        o.object_id = i;
        o.pos = testutil::random_unit_vec(rng);
        o.htm_id = htm::point_to_htm(o.pos, 14);
        objects.push_back(o);
    }
    auto parts = store::partition_catalog(objects, capacity);
    World w;
    w.manifest.capacity = capacity;
    for (auto& b : parts) {
        w.manifest.buckets.push_back({b.range, b.objects.size()});
        w.buckets.push_back(std::make_shared<store::Bucket>(std::move(b)));
    }
    return w;
}

// a query of n probes centred near one catalog object of the world
workload::Query clustered_query(std::mt19937_64& rng, const World& w, std::uint64_t id,
                                double arrival_ms, std::size_t n_probes) {
    std::uniform_int_distribution<std::size_t> pick_bucket(0, w.buckets.size() - 1);
    const auto& bucket = *w.buckets[pick_bucket(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, bucket.objects.size() - 1);
    htm::UnitVec center = bucket.objects[pick(rng)].pos;
    std::normal_distribution<double> g(0.0, 0.01);

    workload::Query q;
    q.query_id = id;
    q.arrival = from_ms(arrival_ms);
    for (std::size_t i = 0; i < n_probes; ++i) {
        htm::UnitVec p = htm::UnitVec{center.x + g(rng), center.y + g(rng),
                                      center.z + g(rng)}
                             .normalized();
        q.objects.push_back(workload::make_match_object(p, 1e-4));
    }
    return q;
}

SimConfig config_for(sched::PolicyKind kind, double alpha, std::size_t capacity,
                     std::size_t cache_buckets = 20) {
    SimConfig cfg;
    cfg.policy.kind = kind;
    cfg.policy.alpha = alpha;
    cfg.model.bucket_capacity = capacity;
    cfg.cache_buckets = cache_buckets;
    return cfg;
}

bool metrics_equal(const SimMetrics& a, const SimMetrics& b) {
    return a.completed == b.completed && a.makespan_ms == b.makespan_ms &&
           a.throughput_qps == b.throughput_qps && a.mean_response_ms == b.mean_response_ms &&
           a.var_response_ms2 == b.var_response_ms2 && a.cache_hit_rate == b.cache_hit_rate &&
           a.items_enqueued == b.items_enqueued && a.items_resolved == b.items_resolved &&
           a.total_matches == b.total_matches && a.batches == b.batches;
}

} // namespace

TEST_CASE("batch cost arithmetic with the published constants") {
    CostModel model; // tb=1200, tm=0.13, threshold 0.03, capacity 1000
    CHECK(batch_cost_ms(join::Strategy::Scan, 100, false, model) ==
          doctest::Approx(1213.0).epsilon(1e-12));
    CHECK(batch_cost_ms(join::Strategy::Scan, 100, true, model) ==
          doctest::Approx(13.0).epsilon(1e-12));

    // at the break-even batch both strategies cost the same (non-resident)
    model.bucket_capacity = 10'000;
    std::size_t break_even = 300; // 0.03 * 10,000
    CHECK(batch_cost_ms(join::Strategy::Index, break_even, false, model) ==
          doctest::Approx(batch_cost_ms(join::Strategy::Scan, break_even, false, model)));
    // resident index probes cost only the match term
    CHECK(batch_cost_ms(join::Strategy::Index, 50, true, model) ==
          doctest::Approx(50 * 0.13));
}

TEST_CASE("single query against one cold bucket completes at 1213 ms") {
    std::mt19937_64 rng(127);
    World w = make_world(rng, 500, 1000); // one bucket spanning everything

    for (double alpha : {0.0, 0.5, 1.0}) {
        auto q = clustered_query(rng, w, 1, 0.0, 100);
        std::vector<workload::Query> trace{q};
        auto cfg = config_for(sched::PolicyKind::LifeRaft, alpha, 1000);
        std::vector<DecisionRecord> explain;
        auto m = run(trace, w.manifest, w.loader(), cfg, &explain);

        CHECK(m.completed == 1);
        CHECK(m.makespan_ms == doctest::Approx(1213.0).epsilon(1e-9));
        CHECK(m.mean_response_ms == doctest::Approx(1213.0).epsilon(1e-9));
        CHECK(m.throughput_qps == doctest::Approx(1.0 / 1.213).epsilon(1e-9));
        REQUIRE(explain.size() == 1);
        CHECK(explain[0].strategy == join::Strategy::Scan);
        CHECK(explain[0].batch_size == 100);
    }
}

TEST_CASE("two identical queries share one batch under liferaft, not under noshare") {
    std::mt19937_64 rng(131);
    World w = make_world(rng, 500, 1000);
    auto q1 = clustered_query(rng, w, 1, 0.0, 100);
    auto q2 = q1;
    q2.query_id = 2;
    std::vector<workload::Query> trace{q1, q2};

    auto lr = run(trace, w.manifest, w.loader(),
                  config_for(sched::PolicyKind::LifeRaft, 0.0, 1000));
    CHECK(lr.completed == 2);
    CHECK(lr.batches == 1);
    CHECK(lr.makespan_ms == doctest::Approx(1226.0).epsilon(1e-9)); // 1200 + 0.13*200
    CHECK(lr.mean_response_ms == doctest::Approx(1226.0).epsilon(1e-9));
    CHECK(lr.var_response_ms2 == doctest::Approx(0.0));

    auto ns = run(trace, w.manifest, w.loader(),
                  config_for(sched::PolicyKind::NoShare, 0.0, 1000));
    CHECK(ns.completed == 2);
    CHECK(ns.batches == 2);
    // second query finishes one full bucket read (plus matching) later
    CHECK(ns.makespan_ms == doctest::Approx(2426.0).epsilon(1e-9));
    CHECK(ns.mean_response_ms == doctest::Approx((1213.0 + 2426.0) / 2.0).epsilon(1e-9));
    CHECK(ns.cache_hit_rate == 0.0);
}

TEST_CASE("empty trace yields zero metrics") {
    std::mt19937_64 rng(137);
    World w = make_world(rng, 100, 50);
    auto m = run({}, w.manifest, w.loader(), config_for(sched::PolicyKind::LifeRaft, 0.0, 50));
    CHECK(m.completed == 0);
    CHECK(m.makespan_ms == 0.0);
    CHECK(m.throughput_qps == 0.0);
}

TEST_CASE("conservation and determinism over random traces") {
    std::mt19937_64 rng(139);
    World w = make_world(rng, 2000, 100);

    for (auto kind : {sched::PolicyKind::LifeRaft, sched::PolicyKind::RoundRobin,
                      sched::PolicyKind::NoShare}) {
        std::vector<workload::Query> trace;
        double t = 0.0;
        std::exponential_distribution<double> gap(0.002); // per ms
        for (int i = 0; i < 30; ++i) {
            trace.push_back(clustered_query(rng, w, i, t, 5 + rng() % 40));
            t += gap(rng);
        }
        auto cfg = config_for(kind, 0.3, 100, 4);
        auto m1 = run(trace, w.manifest, w.loader(), cfg);
        CHECK(m1.completed == 30);
        CHECK(m1.items_enqueued == m1.items_resolved);
        CHECK(m1.items_enqueued > 0);
        CHECK(m1.mean_response_ms >= 0.0);

        auto m2 = run(trace, w.manifest, w.loader(), cfg);
        CHECK(metrics_equal(m1, m2));
    }
}

TEST_CASE("virtual clock of scheduling decisions never decreases") {
    std::mt19937_64 rng(149);
    World w = make_world(rng, 1000, 100);
    std::vector<workload::Query> trace;
    for (int i = 0; i < 20; ++i) {
        trace.push_back(clustered_query(rng, w, i, i * 350.0, 10 + rng() % 30));
    }
    std::vector<DecisionRecord> explain;
    run(trace, w.manifest, w.loader(), config_for(sched::PolicyKind::LifeRaft, 0.25, 100),
        &explain);
    REQUIRE(!explain.empty());
    for (std::size_t i = 1; i < explain.size(); ++i) {
        CHECK(explain[i].time >= explain[i - 1].time);
    }
}

TEST_CASE("liferaft throughput dominates noshare on shared workloads") {
    std::mt19937_64 rng(151);
    World w = make_world(rng, 3000, 100);

    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 trng(seed);
        std::vector<workload::Query> trace;
        double t = 0.0;
        // two hot spots most queries revisit
        for (int i = 0; i < 40; ++i) {
            auto q = clustered_query(trng, w, i, t, 10 + trng() % 60);
            trace.push_back(q);
            t += 400.0 + static_cast<double>(trng() % 1200);
        }
        auto ns = run(trace, w.manifest, w.loader(),
                      config_for(sched::PolicyKind::NoShare, 0.0, 100, 6));
        for (double alpha : {0.0, 0.5, 1.0}) {
            auto lr = run(trace, w.manifest, w.loader(),
                          config_for(sched::PolicyKind::LifeRaft, alpha, 100, 6));
            CHECK(lr.throughput_qps >= ns.throughput_qps * 0.99);
        }
        auto lr0 = run(trace, w.manifest, w.loader(),
                       config_for(sched::PolicyKind::LifeRaft, 0.0, 100, 6));
        if (lr0.throughput_qps >= ns.throughput_qps) ++wins;
    }
    CHECK(wins >= 4);
}

TEST_CASE("saturation error carries the virtual time") {
    std::mt19937_64 rng(157);
    World w = make_world(rng, 500, 50);
    std::vector<workload::Query> trace;
    for (int i = 0; i < 10; ++i) {
        trace.push_back(clustered_query(rng, w, i, 0.0, 50));
    }
    auto cfg = config_for(sched::PolicyKind::LifeRaft, 0.0, 50);
    cfg.max_queue_items = 10;
    CHECK_THROWS_AS(run(trace, w.manifest, w.loader(), cfg), SaturationError);
    try {
        run(trace, w.manifest, w.loader(), cfg);
    } catch (const SaturationError& e) {
        CHECK(std::string(e.what()).find("virtual time") != std::string::npos);
    }
}

TEST_CASE("sweep: single cell equals a direct run, same seed repeats exactly") {
    std::mt19937_64 rng(163);
    World w = make_world(rng, 1000, 100);
    std::vector<workload::Query> trace;
    for (int i = 0; i < 15; ++i) {
        trace.push_back(clustered_query(rng, w, i, i * 100.0, 5 + rng() % 20));
    }

    double alpha = 0.5;
    double rate = 0.8;
    std::uint64_t seed = 99;
    SimConfig base = config_for(sched::PolicyKind::LifeRaft, 0.0, 100, 8);

    auto res = sweep(trace, w.manifest, w.loader(), std::span(&alpha, 1), std::span(&rate, 1),
                     std::span(&seed, 1), base);
    REQUIRE(res.cells.size() == 1);
    REQUIRE(res.curves.size() == 1);
    REQUIRE(res.curves[0].points.size() == 1);

    auto resampled = resample_arrivals(trace, rate, seed);
    SimConfig direct = base;
    direct.policy.alpha = alpha;
    auto m = run(resampled, w.manifest, w.loader(), direct);
    CHECK(metrics_equal(res.cells[0].metrics, m));
    CHECK(res.curves[0].points[0].throughput_qps == m.throughput_qps);

    auto res2 = sweep(trace, w.manifest, w.loader(), std::span(&alpha, 1), std::span(&rate, 1),
                      std::span(&seed, 1), base);
    CHECK(metrics_equal(res2.cells[0].metrics, res.cells[0].metrics));
}

TEST_CASE("resampled arrivals are sorted and hit the target rate") {
    std::mt19937_64 rng(167);
    World w = make_world(rng, 200, 200);
    std::vector<workload::Query> trace;
    for (int i = 0; i < 1200; ++i) {
        workload::Query q;
        q.query_id = i;
        q.arrival = from_ms(i * 1.0);
        q.objects.push_back(workload::make_match_object(testutil::random_unit_vec(rng), 1e-5));
        trace.push_back(q);
    }
    auto resampled = resample_arrivals(trace, 2.0, 7);
    for (std::size_t i = 1; i < resampled.size(); ++i) {
        CHECK(resampled[i].arrival >= resampled[i - 1].arrival);
    }
    double realized =
        static_cast<double>(resampled.size()) / (to_ms(resampled.back().arrival) / 1000.0);
    CHECK(realized == doctest::Approx(2.0).epsilon(0.10));
}
