#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nc/errors.hpp"
#include "nc/point_cloud.hpp"
#include "nc/rng.hpp"
#include "oracles.hpp"

using namespace nc;

namespace {

PointCloud random_cloud(Xoshiro256& rng, std::size_t n, double span = 2.0) {
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({rng.uniform(-span, span), rng.uniform(-span, span),
                                rng.uniform(-span, span)});
    return cloud;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("noiseless unit sphere points sit at radius 1") {
    ShapeSpec spec;
    spec.family = ShapeFamily::Sphere;
    spec.scale = {1.0, 1.0, 1.0};
    spec.noise_sigma = 0.0;
    spec.seed = 99;
    const PointCloud cloud = generate_cloud(spec, 128);
    REQUIRE(cloud.size() == 128);
    for (const Vec3& p : cloud.points) {
        const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
        CHECK(std::abs(r - 1.0) < 1e-9);
    }
}

TEST_CASE("generate_cloud is a pure function of the spec") {
    ShapeSpec spec;
    spec.family = ShapeFamily::Cylinder;
    spec.scale = {0.4, 0.4, 1.3};
    spec.noise_sigma = 0.05;
    spec.seed = 0xfeedbeef;
    const PointCloud a = generate_cloud(spec, 64);
    const PointCloud b = generate_cloud(spec, 64);
    CHECK(a == b);
}

TEST_CASE("box clouds lie on the scaled box surface") {
    ShapeSpec spec;
    spec.family = ShapeFamily::Box;
    spec.scale = {1.0, 2.0, 3.0};
    spec.noise_sigma = 0.0;
    spec.seed = 7;
    const PointCloud cloud = generate_cloud(spec, 256);
    const double half[3] = {0.5, 1.0, 1.5};
    for (const Vec3& p : cloud.points) {
        const double coords[3] = {p.x, p.y, p.z};
        bool on_face = false;
        for (int axis = 0; axis < 3; ++axis)
            if (std::abs(std::abs(coords[axis]) - half[axis]) < 1e-12) on_face = true;
        CHECK(on_face);
        for (int axis = 0; axis < 3; ++axis)
            CHECK(std::abs(coords[axis]) <= half[axis] + 1e-12);
    }
}

TEST_CASE("invalid shape specs are rejected") {
    ShapeSpec spec;
    spec.scale = {1.0, -1.0, 1.0};
    CHECK_THROWS_AS(generate_cloud(spec, 8), ValidationError);
    spec.scale = {1.0, 1.0, 1.0};
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(generate_cloud(spec, 8), ValidationError);
    spec.noise_sigma = 0.0;
    CHECK_THROWS_AS(generate_cloud(spec, 0), ValidationError);
}

TEST_CASE("normalize_cloud centers and rescales") {
    SUBCASE("already normalized cloud is unchanged") {
        PointCloud cloud;
        cloud.points = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}, {0.0, 0.5, 0.0}, {0.0, -0.5, 0.0}};
        const PointCloud out = normalize_cloud(cloud);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            CHECK(std::abs(out.points[i].x - cloud.points[i].x) < 1e-12);
            CHECK(std::abs(out.points[i].y - cloud.points[i].y) < 1e-12);
            CHECK(std::abs(out.points[i].z - cloud.points[i].z) < 1e-12);
        }
    }
    SUBCASE("two-point symmetry") {
        PointCloud cloud;
        cloud.points = {{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
        const PointCloud out = normalize_cloud(cloud);
        CHECK(out.points[0].x == -1.0);
        CHECK(out.points[1].x == 1.0);
        CHECK(out.points[0].y == 0.0);
        CHECK(out.points[1].z == 0.0);
    }
    SUBCASE("random clouds: recomputed centroid and max norm") {
        Xoshiro256 rng(4242);
        for (int trial = 0; trial < 20; ++trial) {
            const PointCloud out = normalize_cloud(random_cloud(rng, 50));
            Vec3 centroid;
            double max_norm = 0.0;
            for (const Vec3& p : out.points) {
                centroid.x += p.x;
                centroid.y += p.y;
                centroid.z += p.z;
                max_norm = std::max(max_norm,
                                    std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z));
            }
            const double c_norm = std::sqrt(centroid.x * centroid.x + centroid.y * centroid.y +
                                            centroid.z * centroid.z) /
                                  static_cast<double>(out.size());
            CHECK(c_norm < 1e-9);
            CHECK(max_norm > 1.0 - 1e-9);
            CHECK(max_norm < 1.0 + 1e-9);
        }
    }
    SUBCASE("single repeated point keeps scale 1") {
        PointCloud cloud;
        cloud.points = {{3.0, 4.0, 5.0}, {3.0, 4.0, 5.0}};
        const PointCloud out = normalize_cloud(cloud);
        for (const Vec3& p : out.points) {
            CHECK(p.x == 0.0);
            CHECK(p.y == 0.0);
            CHECK(p.z == 0.0);
        }
    }
    SUBCASE("idempotent within 1e-12") {
        Xoshiro256 rng(11);
        const PointCloud once = normalize_cloud(random_cloud(rng, 40));
        const PointCloud twice = normalize_cloud(once);
        for (std::size_t i = 0; i < once.size(); ++i) {
            CHECK(std::abs(once.points[i].x - twice.points[i].x) < 1e-12);
            CHECK(std::abs(once.points[i].y - twice.points[i].y) < 1e-12);
            CHECK(std::abs(once.points[i].z - twice.points[i].z) < 1e-12);
        }
    }
    SUBCASE("non-finite input is a data error") {
        PointCloud cloud;
        cloud.points = {{0.0, 0.0, 0.0}, {std::nan(""), 0.0, 0.0}};
        CHECK_THROWS_AS(normalize_cloud(cloud), ValidationError);
    }
}

TEST_CASE("chamfer distance basics") {
    Xoshiro256 rng(20240);
    SUBCASE("identity is zero") {
        const PointCloud a = random_cloud(rng, 17);
        CHECK(chamfer_distance(a, a) == 0.0);
    }
    SUBCASE("single points at distance 1 give 2") {
        PointCloud a, b;
        a.points = {{0.0, 0.0, 0.0}};
        b.points = {{1.0, 0.0, 0.0}};
        CHECK(chamfer_distance(a, b) == 2.0);
    }
    SUBCASE("exactly symmetric, nonnegative, positive for distinct sets") {
        for (int trial = 0; trial < 50; ++trial) {
            const PointCloud a = random_cloud(rng, 1 + trial % 12);
            const PointCloud b = random_cloud(rng, 1 + (trial * 7) % 12);
            const double ab = chamfer_distance(a, b);
            const double ba = chamfer_distance(b, a);
            CHECK(ab == ba);
            CHECK(ab >= 0.0);
            if (!(a == b)) CHECK(ab > 0.0);  // distinct random clouds
        }
    }
    SUBCASE("empty cloud is a parameter error") {
        const PointCloud a = random_cloud(rng, 4);
        CHECK_THROWS_AS(chamfer_distance(a, PointCloud{}), ValidationError);
        CHECK_THROWS_AS(chamfer_distance(PointCloud{}, a), ValidationError);
    }
}

TEST_CASE("chamfer matches the exhaustive pairwise oracle") {
    Xoshiro256 rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const PointCloud a = random_cloud(rng, 1 + trial % 8);
        const PointCloud b = random_cloud(rng, 1 + (trial * 3) % 8);
        const double got = chamfer_distance(a, b);
        const double expected = oracle::chamfer_bruteforce(a, b);
        CHECK(std::abs(got - expected) < 1e-12);
    }
}

TEST_CASE("NCPC corpus round trip and corruption handling") {
    Xoshiro256 rng(31);
    Corpus corpus;
    corpus.n_points = 12;
    for (std::uint64_t id = 0; id < 5; ++id)
        corpus.entries.push_back(
            {id, id % 2 == 0 ? Split::Train : Split::New, random_cloud(rng, 12)});

    const auto path = temp_file("nc_corpus_test.ncpc");
    save_corpus(corpus, path);

    SUBCASE("round trip is bit-exact") {
        const Corpus loaded = load_corpus(path);
        REQUIRE(loaded.entries.size() == corpus.entries.size());
        CHECK(loaded.n_points == corpus.n_points);
        for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
            CHECK(loaded.entries[i].id == corpus.entries[i].id);
            CHECK(loaded.entries[i].split == corpus.entries[i].split);
            CHECK(loaded.entries[i].cloud == corpus.entries[i].cloud);
        }
    }
    SUBCASE("corrupt magic is a format error") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(load_corpus(path), IoError);
    }
    SUBCASE("unsupported version is rejected") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char version2[4] = {2, 0, 0, 0};
        f.write(version2, 4);
        f.close();
        CHECK_THROWS_AS(load_corpus(path), IoError);
    }
    SUBCASE("truncated file is a format error") {
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 9);
        CHECK_THROWS_AS(load_corpus(path), IoError);
    }
    std::filesystem::remove(path);
}
