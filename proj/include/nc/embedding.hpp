#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nc/point_cloud.hpp"

namespace nc {

using LatentVector = std::vector<double>;

struct EmbeddingRecord {
    std::uint64_t id = 0;
    Split split = Split::Train;
    LatentVector z;
    std::optional<double> error;  // absent until reconstruction error is computed
};

struct EmbeddingSet {
    std::size_t z_dim = 0;
    std::vector<EmbeddingRecord> records;  // unique ids

    const EmbeddingRecord* find(std::uint64_t id) const;
};

// CSV schema: id,split,err,z0,...,z{d-1}; split in {train,new}; err empty if
// absent; floats in 17-significant-digit round-trip form.
void save_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet load_embeddings_csv(const std::filesystem::path& path);

// Principal components of the training embeddings; visualization only.
struct PcaModel {
    std::vector<double> mean;                // z_dim
    std::vector<double> components;          // k x z_dim row-major, orthonormal rows
    std::vector<double> explained_variance;  // k values, non-increasing

    std::size_t dim() const { return mean.size(); }
    std::size_t k() const { return explained_variance.size(); }
};

// Sample mean + top-k eigenpairs of the (1/(n-1)) sample covariance,
// computed by cyclic Jacobi rotations (row-major pivot order) iterated to
// off-diagonal norm < 1e-12. Sign convention: each component's
// largest-magnitude entry is positive, ties broken by lowest index.
// Throws ValidationError on fewer than 2 samples, k > dimension, or
// non-finite input.
PcaModel pca_fit(std::span<const LatentVector> samples, std::size_t k);

// components * (z - mean)
std::vector<double> pca_transform(const PcaModel& model, std::span<const double> z);

}  // namespace nc
