#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nc/point_cloud.hpp"

namespace nc {

// Dense layer with row-major weights (rows x cols) and one bias per row.
struct DenseLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    bool operator==(const DenseLayer&) const = default;
};

// Permutation-invariant point-cloud autoencoder:
//   encoder, applied per point:  3 -> 32 (ReLU) -> 64 (ReLU)
//   coordinate-wise max over points, then a linear map 64 -> z_dim
//   decoder:  z_dim -> 64 (ReLU) -> 128 (ReLU) -> 3*n_points (identity)
// All parameters are double precision. Models are immutable in use; encode,
// decode, and reconstruction_error may run concurrently on a shared model.
struct AutoencoderModel {
    std::size_t n_points = 0;
    std::size_t z_dim = 0;
    DenseLayer enc1;
    DenseLayer enc2;
    DenseLayer bottleneck;
    DenseLayer dec1;
    DenseLayer dec2;
    DenseLayer dec3;

    bool operator==(const AutoencoderModel&) const = default;
};

// Fixed layer order used everywhere (initialization draw order, gradient
// accumulation, Adam state, and the NCAE file layout).
std::array<DenseLayer*, 6> layer_view(AutoencoderModel& model);
std::array<const DenseLayer*, 6> layer_view(const AutoencoderModel& model);

// Same shape as the model; one slot per parameter.
using ModelGradient = AutoencoderModel;

ModelGradient zero_like(const AutoencoderModel& model);

struct TrainConfig {
    std::size_t epochs = 1;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
// drawn layer by layer in the fixed order, row-major within each layer.
AutoencoderModel init_model(std::size_t n_points, std::size_t z_dim, std::uint64_t seed);

// Latent vector at the bottleneck. Exactly invariant to point order.
std::vector<double> encode(const AutoencoderModel& model, const PointCloud& cloud);

PointCloud decode(const AutoencoderModel& model, std::span<const double> z);

// chamfer_distance(cloud, decode(model, encode(model, cloud)))
double reconstruction_error(const AutoencoderModel& model, const PointCloud& cloud);

// Exact analytic gradient of the mean Chamfer loss over the batch.
// Subgradient conventions, pinned for reproducibility: ReLU kink -> 0;
// max-pool routes to the lowest-index maximizing point; Chamfer
// nearest-neighbor ties route to the lowest-index neighbor.
ModelGradient loss_gradient(const AutoencoderModel& model, std::span<const PointCloud> batch);

struct TrainResult {
    AutoencoderModel model;
    std::vector<double> epoch_loss;  // mean Chamfer loss per epoch
};

// Adam with the config hyperparameters; sample order reshuffled per epoch
// from config.seed. Deterministic given (model, corpus, config). Throws
// TrainingDivergedError naming the epoch if the loss goes non-finite.
TrainResult train(const AutoencoderModel& initial, std::span<const PointCloud> corpus,
                  const TrainConfig& config);

// "NCAE" v1 binary, little-endian: magic, u32 version=1, u32 n_points,
// u32 z_dim, then per layer in the fixed order: u32 rows, u32 cols,
// f64 weights row-major, f64 biases. Round trip is bit-exact.
void save_model(const AutoencoderModel& model, const std::filesystem::path& path);
AutoencoderModel load_model(const std::filesystem::path& path);

}  // namespace nc
