#pragma once

// Independent reference implementations the tests check the library
// against. Everything here is deliberately written the slow, obvious way
// and shares no code with the implementation paths under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "nc/autoencoder.hpp"
#include "nc/kdtree.hpp"
#include "nc/point_cloud.hpp"

namespace oracle {

// Exhaustive double loop over all point pairs.
inline double chamfer_bruteforce(const nc::PointCloud& a, const nc::PointCloud& b) {
    auto directed = [](const nc::PointCloud& from, const nc::PointCloud& to) {
        double sum = 0.0;
        for (const nc::Vec3& p : from.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const nc::Vec3& q : to.points) {
                const double dx = p.x - q.x;
                const double dy = p.y - q.y;
                const double dz = p.z - q.z;
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
            sum += best;
        }
        return sum / static_cast<double>(from.points.size());
    };
    return directed(a, b) + directed(b, a);
}

// Exhaustive k-nearest scan with (distance, id) ordering.
inline std::vector<nc::NeighborHit> linear_scan(const std::vector<nc::IndexedVector>& records,
                                                std::span<const double> query, std::size_t k) {
    std::vector<nc::NeighborHit> hits;
    hits.reserve(records.size());
    for (const nc::IndexedVector& r : records) {
        double sum = 0.0;
        for (std::size_t d = 0; d < query.size(); ++d) {
            const double diff = query[d] - r.values[d];
            sum += diff * diff;
        }
        hits.push_back({r.id, std::sqrt(sum)});
    }
    std::sort(hits.begin(), hits.end(), [](const nc::NeighborHit& a, const nc::NeighborHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    hits.resize(std::min(k, hits.size()));
    return hits;
}

// Least-squares non-decreasing fit by exhaustive search over every
// partition of the sorted sequence into contiguous blocks (block value =
// block mean). Feasible for n <= ~16; the tests stay at n <= 6.
inline std::vector<double> isotonic_exhaustive(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> best_fit;
    double best_sse = std::numeric_limits<double>::infinity();

    const std::uint32_t masks = 1u << (n - 1);  // bit i set: cut between i and i+1
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        std::vector<double> fit(n, 0.0);
        bool monotone = true;
        double previous = -std::numeric_limits<double>::infinity();
        std::size_t start = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool cut = i + 1 == n || (mask & (1u << i)) != 0;
            if (!cut) continue;
            double mean = 0.0;
            for (std::size_t j = start; j <= i; ++j) mean += y[j];
            mean /= static_cast<double>(i - start + 1);
            if (mean < previous) {
                monotone = false;
                break;
            }
            for (std::size_t j = start; j <= i; ++j) fit[j] = mean;
            previous = mean;
            start = i + 1;
        }
        if (!monotone) continue;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) sse += (y[i] - fit[i]) * (y[i] - fit[i]);
        if (sse < best_sse) {
            best_sse = sse;
            best_fit = fit;
        }
    }
    return best_fit;
}

// Straight-line reimplementation of the autoencoder forward pass, reading
// the weights directly off the layer structs.
inline std::vector<double> matvec(const nc::DenseLayer& layer, const std::vector<double>& x) {
    std::vector<double> y(layer.rows, 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
        double sum = layer.bias[r];
        for (std::size_t c = 0; c < layer.cols; ++c)
            sum += layer.weights[r * layer.cols + c] * x[c];
        y[r] = sum;
    }
    return y;
}

inline std::vector<double> relu(std::vector<double> x) {
    for (double& v : x) v = std::max(0.0, v);
    return x;
}

inline std::vector<double> encode_reference(const nc::AutoencoderModel& m,
                                            const nc::PointCloud& cloud) {
    std::vector<double> pooled(m.enc2.rows, -std::numeric_limits<double>::infinity());
    for (const nc::Vec3& p : cloud.points) {
        const std::vector<double> h1 = relu(matvec(m.enc1, {p.x, p.y, p.z}));
        const std::vector<double> h2 = relu(matvec(m.enc2, h1));
        for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] = std::max(pooled[c], h2[c]);
    }
    return matvec(m.bottleneck, pooled);
}

inline nc::PointCloud decode_reference(const nc::AutoencoderModel& m,
                                       const std::vector<double>& z) {
    const std::vector<double> d1 = relu(matvec(m.dec1, z));
    const std::vector<double> d2 = relu(matvec(m.dec2, d1));
    const std::vector<double> out = matvec(m.dec3, d2);
    nc::PointCloud cloud;
    for (std::size_t i = 0; i < out.size(); i += 3)
        cloud.points.push_back({out[i], out[i + 1], out[i + 2]});
    return cloud;
}

// Mean Chamfer loss of the batch through the public encode/decode path;
// used as the scalar function for finite differences.
inline double batch_loss_reference(const nc::AutoencoderModel& m,
                                   std::span<const nc::PointCloud> batch) {
    double sum = 0.0;
    for (const nc::PointCloud& cloud : batch)
        sum += nc::chamfer_distance(cloud, decode_reference(m, encode_reference(m, cloud)));
    return sum / static_cast<double>(batch.size());
}

// Eigenvalues of a symmetric matrix via Householder tridiagonalization and
// Sturm-sequence bisection; independent of the Jacobi path under test.
// Returns eigenvalues sorted descending.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
    std::vector<double> diag(n, 0.0), off(n, 0.0);

    // Householder reduction to tridiagonal form.
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += a[i * n + k] * a[i * n + k];
        alpha = std::sqrt(alpha);
        if (a[(k + 1) * n + k] > 0.0) alpha = -alpha;
        if (alpha == 0.0) continue;

        const double r = std::sqrt(0.5 * (alpha * alpha - a[(k + 1) * n + k] * alpha));
        std::vector<double> v(n, 0.0);
        v[k + 1] = (a[(k + 1) * n + k] - alpha) / (2.0 * r);
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a[i * n + k] / (2.0 * r);

        // A <- (I - 2 v v^T) A (I - 2 v v^T)
        std::vector<double> av(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) av[i] += a[i * n + j] * v[j];
        double vav = 0.0;
        for (std::size_t i = 0; i < n; ++i) vav += v[i] * av[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a[i * n + j] += -2.0 * v[i] * av[j] - 2.0 * av[i] * v[j] +
                                4.0 * vav * v[i] * v[j];
    }
    for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
    for (std::size_t i = 0; i + 1 < n; ++i) off[i] = a[(i + 1) * n + i];

    // Sturm count: eigenvalues of the tridiagonal matrix strictly below x.
    auto count_below = [&](double x) {
        std::size_t count = 0;
        double q = diag[0] - x;
        if (q < 0.0) ++count;
        for (std::size_t i = 1; i < n; ++i) {
            if (q == 0.0) q = 1e-300;
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
            if (q < 0.0) ++count;
        }
        return count;
    };

    double radius = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = std::abs(diag[i]);
        if (i > 0) row += std::abs(off[i - 1]);
        if (i + 1 < n) row += std::abs(off[i]);
        radius = std::max(radius, row);
    }
    radius += 1.0;

    std::vector<double> eigen(n, 0.0);
    for (std::size_t idx = 0; idx < n; ++idx) {
        double lo = -radius, hi = radius;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (count_below(mid) <= idx)
                lo = mid;
            else
                hi = mid;
        }
        eigen[idx] = 0.5 * (lo + hi);
    }
    std::sort(eigen.rbegin(), eigen.rend());
    return eigen;
}

// O(n^2) average-rank computation (count-based, no sorting).
inline std::vector<double> ranks_by_counting(std::span<const double> values) {
    std::vector<double> ranks(values.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (values[j] < values[i]) ++less;
            if (values[j] == values[i]) ++equal;
        }
        ranks[i] = static_cast<double>(less) + 0.5 * static_cast<double>(equal + 1);
    }
    return ranks;
}

inline double spearman_bruteforce(std::span<const double> xs, std::span<const double> ys) {
    const std::vector<double> rx = ranks_by_counting(xs);
    const std::vector<double> ry = ranks_by_counting(ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

}  // namespace oracle
