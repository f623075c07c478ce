#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nc/autoencoder.hpp"
#include "nc/point_cloud.hpp"

namespace nc {

struct FamilyCount {
    ShapeFamily family = ShapeFamily::Sphere;
    std::size_t count = 0;
    // optional per-group override of the corpus scale range; lets the
    // out-of-distribution families sit geometrically apart (for example
    // strongly anisotropic boxes) without touching the in-distribution ones
    std::optional<double> scale_min;
    std::optional<double> scale_max;

    FamilyCount() = default;
    FamilyCount(ShapeFamily family_, std::size_t count_,
                std::optional<double> scale_min_ = std::nullopt,
                std::optional<double> scale_max_ = std::nullopt)
        : family(family_), count(count_), scale_min(scale_min_), scale_max(scale_max_) {}

    bool operator==(const FamilyCount&) const = default;
};

// How the synthetic corpus is laid out. Samples get sequential ids: the
// train groups first, in listed order, then the new groups.
struct CorpusConfig {
    std::vector<FamilyCount> train;
    std::vector<FamilyCount> new_split;
    double noise_sigma = 0.02;
    double scale_min = 0.7;
    double scale_max = 1.3;

    bool operator==(const CorpusConfig&) const = default;
};

struct NeighborConfig {
    std::size_t k = 1;          // distances aggregate the mean of k neighbors
    bool standardize = false;   // per-dimension z-score from training stats
    bool pca_space = false;     // measure distances in the 2-PC space instead
                                // of the full latent space (ablation)

    bool operator==(const NeighborConfig&) const = default;
};

// One reproducible experiment. The whole pipeline is a pure function of
// this struct; the serialized form round-trips losslessly.
struct RunConfig {
    std::uint32_t version = 1;
    std::uint64_t seed = 0;
    std::size_t n_points = 64;
    std::size_t z_dim = 16;
    CorpusConfig corpus;
    TrainConfig train;
    NeighborConfig neighbor;
    double tolerance = 0.05;
    std::size_t budget = 40;
    std::size_t batches = 2;
    bool retrain = false;
    std::string out_dir = "out";

    bool operator==(const RunConfig&) const = default;
};

// Throws ValidationError naming the offending field.
void validate_config(const RunConfig& config);

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text, const std::string& context);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

// The pinned demo experiment used throughout the docs and the acceptance run.
RunConfig demo_config();

}  // namespace nc
