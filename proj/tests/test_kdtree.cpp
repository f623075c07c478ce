#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nc/errors.hpp"
#include "nc/kdtree.hpp"
#include "nc/rng.hpp"
#include "oracles.hpp"

using namespace nc;

namespace {

std::vector<IndexedVector> random_records(Xoshiro256& rng, std::size_t n, std::size_t dim) {
    std::vector<IndexedVector> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        IndexedVector r;
        r.id = i;
        r.values.reserve(dim);
        for (std::size_t d = 0; d < dim; ++d) r.values.push_back(rng.uniform(-1.0, 1.0));
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<double> random_query(Xoshiro256& rng, std::size_t dim) {
    std::vector<double> q(dim);
    for (double& v : q) v = rng.uniform(-1.0, 1.0);
    return q;
}

}  // namespace

TEST_CASE("single-record index answers every query with that record") {
    const NeighborIndex index = build_index({{42, {1.0, 2.0, 3.0}}});
    const auto hits = index.query_nearest(std::vector<double>{0.0, 0.0, 0.0}, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == 42);
    CHECK(hits[0].distance == std::sqrt(14.0));
}

TEST_CASE("build validation") {
    CHECK_THROWS_AS(build_index({}), ValidationError);
    CHECK_THROWS_AS(build_index({{1, {1.0}}, {1, {2.0}}}), ValidationError);
    CHECK_THROWS_AS(build_index({{1, {1.0}}, {2, {2.0, 3.0}}}), ValidationError);
}

TEST_CASE("query validation") {
    Xoshiro256 rng(1);
    const NeighborIndex index = build_index(random_records(rng, 10, 4));
    CHECK_THROWS_AS(index.query_nearest(std::vector<double>{0.0, 0.0}, 1), ValidationError);
    CHECK_THROWS_AS(index.query_nearest(random_query(rng, 4), 0), ValidationError);
    CHECK_THROWS_AS(index.query_nearest(random_query(rng, 4), 11), ValidationError);
}

TEST_CASE("input order does not matter") {
    Xoshiro256 rng(77);
    std::vector<IndexedVector> records = random_records(rng, 64, 6);
    std::vector<IndexedVector> shuffled = records;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled[i], shuffled[rng.next_u64() % (i + 1)]);

    const NeighborIndex sorted_index = build_index(records);
    const NeighborIndex shuffled_index = build_index(shuffled);
    for (int trial = 0; trial < 40; ++trial) {
        const auto q = random_query(rng, 6);
        const auto a = sorted_index.query_nearest(q, 5);
        const auto b = shuffled_index.query_nearest(q, 5);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].id == b[i].id);
            CHECK(a[i].distance == b[i].distance);
        }
    }
}

TEST_CASE("tree structure respects every splitting plane") {
    Xoshiro256 rng(2024);
    const NeighborIndex index = build_index(random_records(rng, 1000, 16));
    CHECK(index.check_structure());
}

TEST_CASE("kd-tree equals the linear-scan oracle on 1000 x 200 case") {
    Xoshiro256 rng(90210);
    std::vector<IndexedVector> records = random_records(rng, 1000, 16);
    const NeighborIndex index = build_index(records);
    for (int trial = 0; trial < 200; ++trial) {
        const auto q = random_query(rng, 16);
        const std::size_t k = 1 + trial % 8;
        const auto got = index.query_nearest(q, k);
        const auto expected = oracle::linear_scan(records, q, k);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == expected[i].id);
            CHECK(got[i].distance == expected[i].distance);  // bit-equal
        }
    }
}

TEST_CASE("member queries and tiny offsets") {
    Xoshiro256 rng(5150);
    std::vector<IndexedVector> records = random_records(rng, 100, 8);
    const NeighborIndex index = build_index(records);

    SUBCASE("member query returns itself at distance zero") {
        const auto hits = index.query_nearest(records[37].values, 1);
        CHECK(hits[0].id == 37);
        CHECK(hits[0].distance == 0.0);
        CHECK(index.nn_distance(records[37].values) == 0.0);
    }
    SUBCASE("k == size returns everything sorted by (distance, id)") {
        const auto q = random_query(rng, 8);
        const auto hits = index.query_nearest(q, 100);
        REQUIRE(hits.size() == 100);
        for (std::size_t i = 1; i < hits.size(); ++i) {
            const bool ordered = hits[i - 1].distance < hits[i].distance ||
                                 (hits[i - 1].distance == hits[i].distance &&
                                  hits[i - 1].id < hits[i].id);
            CHECK(ordered);
        }
    }
    SUBCASE("epsilon offset from an isolated point") {
        std::vector<IndexedVector> two = {{0, {0.0, 0.0}}, {1, {10.0, 0.0}}};
        const NeighborIndex small = build_index(two);
        const double eps = 1e-9;
        CHECK(std::abs(small.nn_distance(std::vector<double>{eps, 0.0}) - eps) < 1e-15);
    }
}

TEST_CASE("duplicate vectors break ties by lower id") {
    std::vector<IndexedVector> records = {
        {9, {1.0, 1.0}}, {3, {1.0, 1.0}}, {5, {1.0, 1.0}}, {1, {4.0, 4.0}}};
    const NeighborIndex index = build_index(records);
    const auto hits = index.query_nearest(std::vector<double>{1.0, 1.0}, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == 3);
    CHECK(hits[1].id == 5);
    CHECK(hits[2].id == 9);
}

TEST_CASE("leave-self-out distances skip the query record") {
    std::vector<IndexedVector> records = {
        {0, {0.0}}, {1, {1.0}}, {2, {5.0}}};
    const NeighborIndex index = build_index(records);
    CHECK(leave_self_out_distance(index, 0, std::vector<double>{0.0}, 1) == 1.0);
    CHECK(leave_self_out_distance(index, 1, std::vector<double>{1.0}, 1) == 1.0);
    CHECK(leave_self_out_distance(index, 2, std::vector<double>{5.0}, 1) == 4.0);
}

TEST_CASE("pruning visits well under the whole tree on uniform data") {
    Xoshiro256 rng(616);
    std::vector<IndexedVector> records = random_records(rng, 10000, 16);
    const NeighborIndex index = build_index(records);
    std::size_t total_visited = 0;
    const int queries = 200;
    for (int trial = 0; trial < queries; ++trial) {
        QueryStats stats;
        index.query_nearest(random_query(rng, 16), 1, &stats);
        total_visited += stats.nodes_visited;
    }
    const double mean_visited = static_cast<double>(total_visited) / queries;
    CHECK(mean_visited < 0.6 * static_cast<double>(index.size()));
}
