#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "skybatch/errors.hpp"
#include "skybatch/trace_io.hpp"
#include "skybatch/workload.hpp"
#include "testutil.hpp"

using namespace skybatch;
using namespace skybatch::workload;

namespace {

// Even split of the level-14 id space into n ranges.
std::vector<htm::HtmRange> even_layout(std::uint32_t n) {
    std::vector<htm::HtmRange> ranges;
    std::uint64_t lo = htm::level_min_id(14);
    std::uint64_t hi = htm::level_max_id(14);
    std::uint64_t width = (hi - lo + 1) / n;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint64_t a = lo + i * width;
        std::uint64_t b = (i + 1 == n) ? hi : a + width - 1;
        ranges.push_back({htm::HtmId{static_cast<std::uint32_t>(a)},
                          htm::HtmId{static_cast<std::uint32_t>(b)}});
    }
    return ranges;
}

MatchObject object_with_range(std::uint32_t lo, std::uint32_t hi) {
    MatchObject o;
    o.pos = {1.0, 0.0, 0.0};
    o.radius = 1e-6;
    o.range = {htm::HtmId{lo}, htm::HtmId{hi}};
    return o;
}

Query random_query(std::mt19937_64& rng, std::uint64_t id, SimTime arrival) {
    std::uniform_int_distribution<int> un(1, 12);
    std::uniform_real_distribution<double> ur(1e-5, 5e-3);
    Query q;
    q.query_id = id;
    q.arrival = arrival;
    int n = un(rng);
    for (int i = 0; i < n; ++i) {
        q.objects.push_back(make_match_object(testutil::random_unit_vec(rng), ur(rng)));
    }
    return q;
}

} // namespace

TEST_CASE("match object envelope equals its cover envelope") {
    std::mt19937_64 rng(71);
    for (int i = 0; i < 50; ++i) {
        auto pos = testutil::random_unit_vec(rng);
        double radius = 1e-5 * std::pow(10.0, 2.0 * (i / 50.0));
        MatchObject o = make_match_object(pos, radius);
        auto cover = htm::cover_circle(pos, radius, 14);
        CHECK(o.range.lo == cover.front().lo);
        CHECK(o.range.hi == cover.back().hi);
        CHECK(o.range.contains(htm::point_to_htm(pos, 14)));
    }
    CHECK_THROWS_AS(make_match_object({1, 0, 0}, 0.0), std::invalid_argument);
}

TEST_CASE("preprocess assigns one item per overlapped bucket") {
    auto layout = even_layout(8);

    Query q;
    q.query_id = 1;
    q.arrival = from_ms(100.0);

    // entirely inside bucket 2
    q.objects.push_back(object_with_range(layout[2].lo.raw() + 5, layout[2].lo.raw() + 9));
    // straddles the boundary between buckets 4 and 5
    q.objects.push_back(object_with_range(layout[4].hi.raw() - 1, layout[5].lo.raw() + 1));

    auto batches = preprocess_query(q, 0, layout);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].bucket_index == 2);
    CHECK(batches[0].items.size() == 1);
    CHECK(batches[0].items[0].object_index == 0);
    CHECK(batches[1].bucket_index == 4);
    CHECK(batches[1].items.size() == 1);
    CHECK(batches[2].bucket_index == 5);
    CHECK(batches[2].items.size() == 1);
    CHECK(batches[1].items[0].object_index == 1);
    CHECK(batches[2].items[0].object_index == 1);
    for (const auto& b : batches) {
        for (const auto& item : b.items) {
            CHECK(item.enqueue_time == q.arrival);
            CHECK(item.query_id == 1);
        }
    }
}

TEST_CASE("preprocess equals the brute-force overlap scan") {
    std::mt19937_64 rng(73);
    auto layout = even_layout(16);
    for (int round = 0; round < 60; ++round) {
        Query q = random_query(rng, round, from_ms(round * 10.0));
        auto batches = preprocess_query(q, 7, layout);

        std::set<std::pair<std::uint32_t, std::uint32_t>> got; // (object, bucket)
        std::size_t got_items = 0;
        for (const auto& b : batches) {
            for (const auto& item : b.items) {
                got.insert({item.object_index, b.bucket_index});
                ++got_items;
            }
        }
        CHECK(got.size() == got_items); // no duplicate (object,bucket) pairs

        std::set<std::pair<std::uint32_t, std::uint32_t>> expected;
        for (std::uint32_t oi = 0; oi < q.objects.size(); ++oi) {
            for (std::uint32_t b = 0; b < layout.size(); ++b) {
                if (layout[b].overlaps(q.objects[oi].range)) {
                    expected.insert({oi, b});
                }
            }
        }
        CHECK(got == expected);
        // every object yields at least one item
        std::set<std::uint32_t> objects_seen;
        for (const auto& [oi, b] : got) objects_seen.insert(oi);
        CHECK(objects_seen.size() == q.objects.size());
    }
}

TEST_CASE("preprocess flags an object overlapping no bucket") {
    // deliberately non-tiling layout
    std::vector<htm::HtmRange> holes = {
        {htm::HtmId{htm::level_min_id(14)}, htm::HtmId{htm::level_min_id(14) + 10}}};
    Query q;
    q.query_id = 9;
    q.objects.push_back(object_with_range(htm::level_min_id(14) + 100,
                                          htm::level_min_id(14) + 120));
    CHECK_THROWS_AS(preprocess_query(q, 0, holes), std::logic_error);
}

TEST_CASE("enqueue maintains ages, pending counts, and saturation") {
    WorkloadManager mgr(4, 100);
    auto q0 = mgr.register_query(10, from_ms(10.0));
    auto q1 = mgr.register_query(11, from_ms(5.0));

    BucketItems batch;
    batch.bucket_index = 2;
    WorkloadItem item;
    item.query_id = 10;
    item.query_index = q0;
    item.object_index = 0;
    item.enqueue_time = from_ms(10.0);
    batch.items.push_back(item);

    mgr.enqueue(std::span(&batch, 1));
    CHECK(mgr.oldest_enqueue(2) == from_ms(10.0));
    CHECK(mgr.queue_len(2) == 1);
    CHECK(mgr.pending(q0) == 1);

    // a second, older item drags the queue age back
    batch.items[0].query_index = q1;
    batch.items[0].query_id = 11;
    batch.items[0].enqueue_time = from_ms(5.0);
    mgr.enqueue(std::span(&batch, 1));
    CHECK(mgr.oldest_enqueue(2) == from_ms(5.0));
    CHECK(mgr.age_ms(2, from_ms(250.0)) == doctest::Approx(245.0));

    // age examples: now - oldest, zero at equality
    CHECK(mgr.age_ms(2, from_ms(5.0)) == doctest::Approx(0.0));

    // empty-queue operations error
    CHECK_THROWS_AS(mgr.age_us(0, 0), SchedError);
    CHECK_THROWS_AS(mgr.drain_bucket(0), SchedError);

    // ceiling enforcement
    WorkloadManager tiny(1, 2);
    auto tq = tiny.register_query(1, 0);
    BucketItems big;
    big.bucket_index = 0;
    for (int i = 0; i < 3; ++i) {
        WorkloadItem it2;
        it2.query_index = tq;
        it2.object_index = static_cast<std::uint32_t>(i);
        big.items.push_back(it2);
    }
    CHECK_THROWS_AS(tiny.enqueue(std::span(&big, 1)), SaturationError);
}

TEST_CASE("drain empties the queue atomically and errors when repeated") {
    WorkloadManager mgr(2, 100);
    auto q0 = mgr.register_query(1, 0);
    BucketItems batch;
    batch.bucket_index = 1;
    for (int i = 0; i < 3; ++i) {
        WorkloadItem item;
        item.query_index = q0;
        item.object_index = static_cast<std::uint32_t>(i);
        item.enqueue_time = from_ms(i);
        batch.items.push_back(item);
    }
    mgr.enqueue(std::span(&batch, 1));

    auto items = mgr.drain_bucket(1);
    CHECK(items.size() == 3);
    CHECK(mgr.queue_len(1) == 0);
    CHECK_THROWS_AS(mgr.drain_bucket(1), SchedError);

    // items are gone from the queue but still pending until resolved
    CHECK(mgr.pending(q0) == 3);
    mgr.resolve(q0, 3, from_ms(500.0));
    CHECK(mgr.complete(q0));
    CHECK(mgr.completion_time(q0) == from_ms(500.0));
}

TEST_CASE("per-query drain keeps other queries' items queued") {
    WorkloadManager mgr(1, 100);
    auto qa = mgr.register_query(1, from_ms(1.0));
    auto qb = mgr.register_query(2, from_ms(2.0));

    BucketItems batch;
    batch.bucket_index = 0;
    for (int i = 0; i < 4; ++i) {
        WorkloadItem item;
        item.query_index = (i % 2 == 0) ? qa : qb;
        item.query_id = (i % 2 == 0) ? 1 : 2;
        item.object_index = static_cast<std::uint32_t>(i);
        item.enqueue_time = from_ms(1.0 + i);
        batch.items.push_back(item);
    }
    mgr.enqueue(std::span(&batch, 1));

    auto taken = mgr.drain_bucket_for_query(0, qa);
    CHECK(taken.size() == 2);
    CHECK(mgr.queue_len(0) == 2);
    for (const auto& item : taken) CHECK(item.query_index == qa);
    // remaining oldest recomputed from qb's items
    CHECK(mgr.oldest_enqueue(0) == from_ms(2.0));
    CHECK(mgr.first_queued_bucket(qa) == std::nullopt);
    CHECK(mgr.first_queued_bucket(qb) == 0);
}

TEST_CASE("earliest incomplete query follows arrival order") {
    WorkloadManager mgr(3, 100);
    auto q_late = mgr.register_query(7, from_ms(50.0));
    auto q_early = mgr.register_query(8, from_ms(10.0));

    BucketItems batch;
    batch.bucket_index = 0;
    WorkloadItem item;
    item.query_index = q_late;
    item.enqueue_time = from_ms(50.0);
    batch.items.push_back(item);
    mgr.enqueue(std::span(&batch, 1));

    batch.bucket_index = 2;
    batch.items[0].query_index = q_early;
    batch.items[0].enqueue_time = from_ms(10.0);
    mgr.enqueue(std::span(&batch, 1));

    CHECK(mgr.earliest_incomplete_query() == q_early);
    auto items = mgr.drain_bucket(2);
    mgr.resolve(q_early, items.size(), from_ms(100.0));
    CHECK(mgr.earliest_incomplete_query() == q_late);
}

TEST_CASE("conservation: queue lengths equal pending items of incomplete queries") {
    std::mt19937_64 rng(79);
    auto layout = even_layout(10);
    WorkloadManager mgr(10, 1'000'000);

    std::vector<std::pair<std::uint32_t, std::size_t>> live; // (query index, items)
    for (int round = 0; round < 40; ++round) {
        Query q = random_query(rng, round, from_ms(round));
        auto qi = mgr.register_query(q.query_id, q.arrival);
        auto batches = preprocess_query(q, qi, layout);
        mgr.enqueue(batches);
        std::size_t items = 0;
        for (const auto& b : batches) items += b.items.size();
        live.push_back({qi, items});

        std::size_t queued = 0;
        for (std::uint32_t b = 0; b < mgr.bucket_count(); ++b) queued += mgr.queue_len(b);
        std::size_t pending = 0;
        for (std::uint32_t qx = 0; qx < mgr.query_count(); ++qx) {
            if (!mgr.complete(qx)) pending += mgr.pending(qx);
        }
        CHECK(queued == mgr.total_queued());
        CHECK(queued == pending);
    }

    // drain everything once and resolve; all queries complete
    for (std::uint32_t b = 0; b < mgr.bucket_count(); ++b) {
        if (mgr.queue_len(b) == 0) continue;
        auto items = mgr.drain_bucket(b);
        std::map<std::uint32_t, std::size_t> by_query;
        for (const auto& item : items) ++by_query[item.query_index];
        for (auto [qx, count] : by_query) mgr.resolve(qx, count, from_ms(1000.0));
    }
    for (std::uint32_t qx = 0; qx < mgr.query_count(); ++qx) {
        CHECK(mgr.complete(qx));
    }
    CHECK(mgr.items_enqueued() == mgr.items_resolved());
}

TEST_CASE("trace files round-trip") {
    std::mt19937_64 rng(83);
    std::vector<Query> queries;
    for (int i = 0; i < 20; ++i) {
        queries.push_back(random_query(rng, i, from_ms(i * 123.25)));
    }
    auto path = std::filesystem::temp_directory_path() / "skybatch_trace_test.csv";
    write_trace(path, queries, {"skybatch trace", "queries=20"}, 0xdeadbeefcafe1234ULL);

    auto back = read_trace(path);
    CHECK(back.layout_hash == 0xdeadbeefcafe1234ULL);
    REQUIRE(back.queries.size() == queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        CHECK(back.queries[i].query_id == queries[i].query_id);
        CHECK(back.queries[i].arrival == queries[i].arrival);
        REQUIRE(back.queries[i].objects.size() == queries[i].objects.size());
        for (std::size_t k = 0; k < queries[i].objects.size(); ++k) {
            CHECK(back.queries[i].objects[k].pos.x == queries[i].objects[k].pos.x);
            CHECK(back.queries[i].objects[k].radius == queries[i].objects[k].radius);
            CHECK(back.queries[i].objects[k].range == queries[i].objects[k].range);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("trace parser rejects malformed input") {
    auto path = std::filesystem::temp_directory_path() / "skybatch_trace_bad.csv";
    {
        std::ofstream f(path);
        f << "1,100.0,2\n0.1,0.2,0.97,0.001\n"; // truncated: second object missing
    }
    CHECK_THROWS_AS(read_trace(path), skybatch::ConfigError);
    std::filesystem::remove(path);
}
