#include "nc/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include "nc/errors.hpp"
#include "nc/text.hpp"

namespace nc {

namespace {

// Diagonalizes a symmetric matrix in place by cyclic Jacobi sweeps, pivots
// (p,q) in row-major order, until the off-diagonal Frobenius norm drops
// below 1e-12. Returns the accumulated rotation V (columns = eigenvectors).
std::vector<double> jacobi_eigen(std::vector<double>& a, std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    const double tol = 1e-12;
    const std::size_t max_sweeps = 128;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q)
                if (p != q) off += a[p * n + q] * a[p * n + q];
        if (std::sqrt(off) < tol) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i * n + p];
                    const double aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p * n + i];
                    const double aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v[i * n + p];
                    const double viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    return v;
}

}  // namespace

const EmbeddingRecord* EmbeddingSet::find(std::uint64_t id) const {
    for (const EmbeddingRecord& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

void save_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");

    out << "id,split,err";
    for (std::size_t d = 0; d < set.z_dim; ++d) out << ",z" << d;
    out << '\n';
    for (const EmbeddingRecord& r : set.records) {
        if (r.z.size() != set.z_dim)
            throw ValidationError("save_embeddings_csv: latent dim mismatch for id " +
                                  std::to_string(r.id));
        out << r.id << ',' << split_name(r.split) << ',';
        if (r.error.has_value()) out << format_double(*r.error);
        for (double z : r.z) out << ',' << format_double(z);
        out << '\n';
    }
    if (!out) throw IoError(path.string() + ": write failed");
}

EmbeddingSet load_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    const std::string context = path.string();

    std::string line;
    if (!std::getline(in, line)) throw IoError(context + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "split" || header[2] != "err")
        throw IoError(context + ": header must be id,split,err,z0,...");
    const std::size_t z_dim = header.size() - 3;
    for (std::size_t d = 0; d < z_dim; ++d)
        if (header[3 + d] != "z" + std::to_string(d))
            throw IoError(context + ": header field " + std::to_string(3 + d) +
                          " must be z" + std::to_string(d));

    EmbeddingSet set;
    set.z_dim = z_dim;
    std::set<std::uint64_t> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = context + ":" + std::to_string(line_no);
        if (fields.size() != 3 + z_dim)
            throw IoError(where + ": expected " + std::to_string(3 + z_dim) + " fields, got " +
                          std::to_string(fields.size()));

        EmbeddingRecord record;
        record.id = parse_u64(fields[0], where + " field id");
        record.split = split_from_name(fields[1]);
        if (!fields[2].empty()) {
            const double err = parse_double(fields[2], where + " field err");
            if (!std::isfinite(err) || err < 0.0)
                throw ValidationError(where + " field err: must be finite and >= 0");
            record.error = err;
        }
        record.z.reserve(z_dim);
        for (std::size_t d = 0; d < z_dim; ++d) {
            const double z = parse_double(fields[3 + d], where + " field z" + std::to_string(d));
            if (!std::isfinite(z))
                throw ValidationError(where + " field z" + std::to_string(d) + ": non-finite");
            record.z.push_back(z);
        }
        if (!seen.insert(record.id).second)
            throw ValidationError(where + " field id: duplicate id " + std::to_string(record.id));
        set.records.push_back(std::move(record));
    }
    if (set.records.empty()) throw IoError(context + ": no records");
    return set;
}

PcaModel pca_fit(std::span<const LatentVector> samples, std::size_t k) {
    if (samples.size() < 2) throw ValidationError("pca_fit: need at least 2 samples");
    const std::size_t dim = samples.front().size();
    if (dim == 0) throw ValidationError("pca_fit: zero-dimensional samples");
    if (k == 0 || k > dim)
        throw ValidationError("pca_fit: k=" + std::to_string(k) + " out of range [1, " +
                              std::to_string(dim) + "]");
    for (const LatentVector& s : samples) {
        if (s.size() != dim) throw ValidationError("pca_fit: inconsistent sample dimensions");
        for (double v : s)
            if (!std::isfinite(v)) throw ValidationError("pca_fit: non-finite input");
    }

    PcaModel model;
    model.mean.assign(dim, 0.0);
    for (const LatentVector& s : samples)
        for (std::size_t d = 0; d < dim; ++d) model.mean[d] += s[d];
    for (double& m : model.mean) m /= static_cast<double>(samples.size());

    // sample covariance, 1/(n-1) normalization
    std::vector<double> cov(dim * dim, 0.0);
    for (const LatentVector& s : samples) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double di = s[i] - model.mean[i];
            for (std::size_t j = i; j < dim; ++j)
                cov[i * dim + j] += di * (s[j] - model.mean[j]);
        }
    }
    const double norm = 1.0 / static_cast<double>(samples.size() - 1);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) {
            cov[i * dim + j] *= norm;
            cov[j * dim + i] = cov[i * dim + j];
        }

    std::vector<double> diag = cov;
    const std::vector<double> vectors = jacobi_eigen(diag, dim);

    std::vector<std::size_t> order(dim);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return diag[a * dim + a] > diag[b * dim + b];
    });

    model.components.assign(k * dim, 0.0);
    model.explained_variance.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t col = order[c];
        // covariance is PSD; tiny negative eigenvalues are rotation residue
        model.explained_variance[c] = std::max(0.0, diag[col * dim + col]);

        std::size_t peak = 0;
        double peak_mag = -1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double mag = std::abs(vectors[d * dim + col]);
            if (mag > peak_mag) {
                peak_mag = mag;
                peak = d;
            }
        }
        const double sign = vectors[peak * dim + col] < 0.0 ? -1.0 : 1.0;
        for (std::size_t d = 0; d < dim; ++d)
            model.components[c * dim + d] = sign * vectors[d * dim + col];
    }
    return model;
}

std::vector<double> pca_transform(const PcaModel& model, std::span<const double> z) {
    if (z.size() != model.dim())
        throw ValidationError("pca_transform: vector dim " + std::to_string(z.size()) +
                              " != model dim " + std::to_string(model.dim()));
    std::vector<double> out(model.k(), 0.0);
    for (std::size_t c = 0; c < model.k(); ++c) {
        double sum = 0.0;
        for (std::size_t d = 0; d < model.dim(); ++d)
            sum += model.components[c * model.dim() + d] * (z[d] - model.mean[d]);
        out[c] = sum;
    }
    return out;
}

}  // namespace nc
