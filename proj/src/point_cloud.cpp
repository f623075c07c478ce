#include "nc/point_cloud.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "nc/binary_io.hpp"
#include "nc/errors.hpp"
#include "nc/rng.hpp"

namespace nc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Uniform point on the unit sphere via the area-preserving cylindrical map:
// z = 1 - 2u, phi = 2*pi*v.
Vec3 sample_unit_sphere(Xoshiro256& rng) {
    const double z = 1.0 - 2.0 * rng.next_double();
    const double phi = 2.0 * kPi * rng.next_double();
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

// Uniform point on the surface of the axis-aligned box [-hx,hx]x[-hy,hy]x
// [-hz,hz]. The face is chosen in proportion to its (scaled) area in the
// fixed order +x, -x, +y, -y, +z, -z; fixed coordinates are exact so surface
// membership holds bit-for-bit.
Vec3 sample_box_surface(Xoshiro256& rng, double hx, double hy, double hz) {
    const double ax = hy * hz;  // area/4 of each x-normal face
    const double ay = hx * hz;
    const double az = hx * hy;
    const double total = 2.0 * (ax + ay + az);
    const double pick = rng.next_double() * total;
    const double u = (rng.next_double() - 0.5) * 2.0;
    const double v = (rng.next_double() - 0.5) * 2.0;
    if (pick < ax) return {hx, u * hy, v * hz};
    if (pick < 2.0 * ax) return {-hx, u * hy, v * hz};
    if (pick < 2.0 * ax + ay) return {u * hx, hy, v * hz};
    if (pick < 2.0 * (ax + ay)) return {u * hx, -hy, v * hz};
    if (pick < 2.0 * (ax + ay) + az) return {u * hx, v * hy, hz};
    return {u * hx, v * hy, -hz};
}

// Uniform point on a closed circular cylinder of radius r, height h, axis z.
// The component (lateral wall / top cap / bottom cap) is chosen in
// proportion to its area; caps use the sqrt trick for areal uniformity.
Vec3 sample_cylinder_surface(Xoshiro256& rng, double r, double h) {
    const double lateral = 2.0 * kPi * r * h;
    const double cap = kPi * r * r;
    const double total = lateral + 2.0 * cap;
    const double pick = rng.next_double() * total;
    if (pick < lateral) {
        const double phi = 2.0 * kPi * rng.next_double();
        const double z = (rng.next_double() - 0.5) * h;
        return {r * std::cos(phi), r * std::sin(phi), z};
    }
    const double rho = r * std::sqrt(rng.next_double());
    const double phi = 2.0 * kPi * rng.next_double();
    const double z = pick < lateral + cap ? 0.5 * h : -0.5 * h;
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

double squared_norm(const Vec3& p) { return p.x * p.x + p.y * p.y + p.z * p.z; }

// Directed Chamfer term: (1/|from|) sum over `from` of the squared distance
// to the nearest point of `to`. Ties take the lowest `to` index (strict <).
double directed_chamfer(const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const Vec3& p : from.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : to.points) {
            const double dx = p.x - q.x;
            const double dy = p.y - q.y;
            const double dz = p.z - q.z;
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best) best = d;
        }
        sum += best;
    }
    return sum / static_cast<double>(from.size());
}

constexpr char kCorpusMagic[4] = {'N', 'C', 'P', 'C'};
constexpr std::uint32_t kCorpusVersion = 1;

}  // namespace

const char* shape_family_name(ShapeFamily family) {
    switch (family) {
        case ShapeFamily::Sphere: return "sphere";
        case ShapeFamily::Ellipsoid: return "ellipsoid";
        case ShapeFamily::Box: return "box";
        case ShapeFamily::Cylinder: return "cylinder";
    }
    return "?";
}

ShapeFamily shape_family_from_name(const std::string& name) {
    if (name == "sphere") return ShapeFamily::Sphere;
    if (name == "ellipsoid") return ShapeFamily::Ellipsoid;
    if (name == "box") return ShapeFamily::Box;
    if (name == "cylinder") return ShapeFamily::Cylinder;
    throw ValidationError("unknown shape family '" + name + "'");
}

const char* split_name(Split split) {
    return split == Split::Train ? "train" : "new";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "new") return Split::New;
    throw ValidationError("unknown split '" + name + "'");
}

PointCloud generate_cloud(const ShapeSpec& spec, std::size_t n_points) {
    if (n_points == 0) throw ValidationError("generate_cloud: n_points must be >= 1");
    for (double s : spec.scale)
        if (!(s > 0.0)) throw ValidationError("generate_cloud: scale parameters must be > 0");
    if (!(spec.noise_sigma >= 0.0))
        throw ValidationError("generate_cloud: noise_sigma must be >= 0");

    Xoshiro256 rng(spec.seed);
    PointCloud cloud;
    cloud.points.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        Vec3 p;
        switch (spec.family) {
            case ShapeFamily::Sphere:
            case ShapeFamily::Ellipsoid: {
                // sphere is the equal-scale special case of the ellipsoid map
                p = sample_unit_sphere(rng);
                p.x *= spec.scale[0];
                p.y *= spec.scale[1];
                p.z *= spec.scale[2];
                break;
            }
            case ShapeFamily::Box:
                p = sample_box_surface(rng, 0.5 * spec.scale[0], 0.5 * spec.scale[1],
                                       0.5 * spec.scale[2]);
                break;
            case ShapeFamily::Cylinder: {
                p = sample_cylinder_surface(rng, spec.scale[0], spec.scale[2]);
                p.y *= spec.scale[1] / spec.scale[0];
                break;
            }
        }
        if (spec.noise_sigma > 0.0) {
            p.x += spec.noise_sigma * rng.normal();
            p.y += spec.noise_sigma * rng.normal();
            p.z += spec.noise_sigma * rng.normal();
        }
        cloud.points.push_back(p);
    }
    return cloud;
}

PointCloud normalize_cloud(const PointCloud& cloud) {
    if (cloud.size() == 0) throw ValidationError("normalize_cloud: empty cloud");
    for (const Vec3& p : cloud.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw ValidationError("normalize_cloud: non-finite coordinate");

    Vec3 centroid;
    for (const Vec3& p : cloud.points) {
        centroid.x += p.x;
        centroid.y += p.y;
        centroid.z += p.z;
    }
    const double inv_n = 1.0 / static_cast<double>(cloud.size());
    centroid.x *= inv_n;
    centroid.y *= inv_n;
    centroid.z *= inv_n;

    PointCloud out;
    out.points.reserve(cloud.size());
    double max_sq = 0.0;
    for (const Vec3& p : cloud.points) {
        const Vec3 c{p.x - centroid.x, p.y - centroid.y, p.z - centroid.z};
        max_sq = std::max(max_sq, squared_norm(c));
        out.points.push_back(c);
    }
    if (max_sq > 0.0) {
        const double inv_scale = 1.0 / std::sqrt(max_sq);
        for (Vec3& p : out.points) {
            p.x *= inv_scale;
            p.y *= inv_scale;
            p.z *= inv_scale;
        }
    }
    return out;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    if (a.size() == 0 || b.size() == 0)
        throw ValidationError("chamfer_distance: clouds must be nonempty");
    // IEEE addition commutes, so directed(a,b) + directed(b,a) is bit-equal
    // under argument swap.
    return directed_chamfer(a, b) + directed_chamfer(b, a);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    if (corpus.entries.empty()) throw ValidationError("save_corpus: empty corpus");
    for (const CorpusEntry& e : corpus.entries)
        if (e.cloud.size() != corpus.n_points)
            throw ValidationError("save_corpus: cloud size mismatch for id " +
                                  std::to_string(e.id));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(kCorpusMagic, 4);
    bin::write_u32(out, kCorpusVersion);
    bin::write_u32(out, static_cast<std::uint32_t>(corpus.entries.size()));
    bin::write_u32(out, static_cast<std::uint32_t>(corpus.n_points));
    for (const CorpusEntry& e : corpus.entries) {
        bin::write_u64(out, e.id);
        bin::write_u8(out, static_cast<std::uint8_t>(e.split));
        for (const Vec3& p : e.cloud.points) {
            bin::write_f64(out, p.x);
            bin::write_f64(out, p.y);
            bin::write_f64(out, p.z);
        }
    }
    if (!out) throw IoError(path.string() + ": write failed");
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    const std::string context = path.string();

    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kCorpusMagic, 4))
        throw IoError(context + ": bad magic, not an NCPC corpus");
    const std::uint32_t version = bin::read_u32(in, context);
    if (version != kCorpusVersion)
        throw IoError(context + ": unsupported corpus version " + std::to_string(version));

    const std::uint32_t n_clouds = bin::read_u32(in, context);
    const std::uint32_t n_points = bin::read_u32(in, context);
    if (n_clouds == 0 || n_points == 0)
        throw IoError(context + ": empty corpus header");

    Corpus corpus;
    corpus.n_points = n_points;
    corpus.entries.reserve(n_clouds);
    for (std::uint32_t c = 0; c < n_clouds; ++c) {
        CorpusEntry entry;
        entry.id = bin::read_u64(in, context);
        const std::uint8_t split = bin::read_u8(in, context);
        if (split > 1)
            throw IoError(context + ": invalid split byte " + std::to_string(split));
        entry.split = static_cast<Split>(split);
        entry.cloud.points.reserve(n_points);
        for (std::uint32_t i = 0; i < n_points; ++i) {
            Vec3 p;
            p.x = bin::read_f64(in, context);
            p.y = bin::read_f64(in, context);
            p.z = bin::read_f64(in, context);
            entry.cloud.points.push_back(p);
        }
        corpus.entries.push_back(std::move(entry));
    }
    return corpus;
}

}  // namespace nc
