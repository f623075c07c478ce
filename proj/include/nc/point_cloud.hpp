#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nc {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

// N x 3 coordinates in unitless model space.
struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
    bool operator==(const PointCloud&) const = default;
};

enum class ShapeFamily { Sphere, Ellipsoid, Box, Cylinder };

const char* shape_family_name(ShapeFamily family);
ShapeFamily shape_family_from_name(const std::string& name);

// Fully determines one synthetic cloud; identical specs yield bit-identical
// output. Scale semantics per family: sphere/ellipsoid = semi-axes,
// box = full side lengths, cylinder = (radius_x, radius_y, height).
struct ShapeSpec {
    ShapeFamily family = ShapeFamily::Sphere;
    std::array<double, 3> scale{1.0, 1.0, 1.0};
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Samples n_points on the family's surface, scales per spec, and adds
// isotropic Gaussian jitter of std noise_sigma. Pure function of (spec,
// n_points). Throws ValidationError on non-positive scale, negative noise,
// or n_points == 0.
PointCloud generate_cloud(const ShapeSpec& spec, std::size_t n_points);

// Centers the cloud on its centroid and rescales so the farthest point has
// norm 1. A cloud of one repeated point is centered but left at scale 1.
// Throws ValidationError on non-finite coordinates.
PointCloud normalize_cloud(const PointCloud& cloud);

// Symmetric squared-distance Chamfer:
//   (1/|A|) sum_a min_b |a-b|^2 + (1/|B|) sum_b min_a |a-b|^2.
// Terms are evaluated in a fixed canonical order, so swapping the arguments
// performs identical arithmetic and returns the identical value.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

enum class Split : std::uint8_t { Train = 0, New = 1 };

const char* split_name(Split split);
Split split_from_name(const std::string& name);

struct CorpusEntry {
    std::uint64_t id = 0;
    Split split = Split::Train;
    PointCloud cloud;
};

// One fixed-size corpus: every cloud has exactly n_points points.
struct Corpus {
    std::size_t n_points = 0;
    std::vector<CorpusEntry> entries;
};

// "NCPC" v1 binary, little-endian:
//   magic "NCPC", u32 version=1, u32 n_clouds, u32 n_points,
//   per cloud: u64 id, u8 split (0=train, 1=new), f64 coords row-major.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace nc
