#include "nc/autoencoder.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "nc/binary_io.hpp"
#include "nc/errors.hpp"
#include "nc/rng.hpp"

namespace nc {

namespace {

constexpr std::size_t kEnc1 = 32;
constexpr std::size_t kEnc2 = 64;
constexpr std::size_t kDec1 = 64;
constexpr std::size_t kDec2 = 128;

constexpr char kModelMagic[4] = {'N', 'C', 'A', 'E'};
constexpr std::uint32_t kModelVersion = 1;

// y = W x + b
void affine(const DenseLayer& layer, const double* x, double* y) {
    for (std::size_t r = 0; r < layer.rows; ++r) {
        const double* row = layer.weights.data() + r * layer.cols;
        double sum = layer.bias[r];
        for (std::size_t c = 0; c < layer.cols; ++c) sum += row[c] * x[c];
        y[r] = sum;
    }
}

void relu_inplace(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < 0.0) x[i] = 0.0;
}

// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    // encoder, per point (row-major point x channel)
    std::vector<double> pre1, h1, pre2, h2;
    std::vector<double> pooled;            // kEnc2
    std::vector<std::size_t> pool_argmax;  // kEnc2, lowest maximizing point
    std::vector<double> latent;            // z_dim
    // decoder
    std::vector<double> pre_d1, d1, pre_d2, d2, out;  // out = 3*n_points
    PointCloud reconstruction;
};

void run_forward(const AutoencoderModel& m, const PointCloud& cloud, ForwardTrace& t) {
    const std::size_t n = m.n_points;
    t.pre1.resize(n * kEnc1);
    t.h1.resize(n * kEnc1);
    t.pre2.resize(n * kEnc2);
    t.h2.resize(n * kEnc2);
    t.pooled.assign(kEnc2, -std::numeric_limits<double>::infinity());
    t.pool_argmax.assign(kEnc2, 0);

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = cloud.points[i];
        const double input[3] = {p.x, p.y, p.z};
        double* pre1 = t.pre1.data() + i * kEnc1;
        double* h1 = t.h1.data() + i * kEnc1;
        affine(m.enc1, input, pre1);
        for (std::size_t c = 0; c < kEnc1; ++c) h1[c] = pre1[c] > 0.0 ? pre1[c] : 0.0;

        double* pre2 = t.pre2.data() + i * kEnc2;
        double* h2 = t.h2.data() + i * kEnc2;
        affine(m.enc2, h1, pre2);
        for (std::size_t c = 0; c < kEnc2; ++c) h2[c] = pre2[c] > 0.0 ? pre2[c] : 0.0;

        for (std::size_t c = 0; c < kEnc2; ++c) {
            if (h2[c] > t.pooled[c]) {  // strict: ties keep the lowest point index
                t.pooled[c] = h2[c];
                t.pool_argmax[c] = i;
            }
        }
    }

    t.latent.resize(m.z_dim);
    affine(m.bottleneck, t.pooled.data(), t.latent.data());

    t.pre_d1.resize(kDec1);
    affine(m.dec1, t.latent.data(), t.pre_d1.data());
    t.d1 = t.pre_d1;
    relu_inplace(t.d1.data(), kDec1);

    t.pre_d2.resize(kDec2);
    affine(m.dec2, t.d1.data(), t.pre_d2.data());
    t.d2 = t.pre_d2;
    relu_inplace(t.d2.data(), kDec2);

    t.out.resize(3 * n);
    affine(m.dec3, t.d2.data(), t.out.data());

    t.reconstruction.points.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        t.reconstruction.points[i] = {t.out[3 * i], t.out[3 * i + 1], t.out[3 * i + 2]};
}

double squared_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// Nearest index in `to` for each point of `from`; ties keep the lowest index.
void nearest_assignment(const PointCloud& from, const PointCloud& to,
                        std::vector<std::size_t>& assign, double& sum) {
    assign.resize(from.size());
    sum = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < to.size(); ++j) {
            const double d = squared_dist(from.points[i], to.points[j]);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        assign[i] = best_j;
        sum += best;
    }
}

// Accumulates the analytic gradient of chamfer(cloud, reconstruction) into
// `grad` (unscaled) and returns the sample loss.
double backward_into(const AutoencoderModel& m, const PointCloud& cloud, ForwardTrace& t,
                     ModelGradient& grad) {
    const std::size_t n = m.n_points;
    run_forward(m, cloud, t);

    std::vector<std::size_t> to_recon;  // x_i -> nearest y
    std::vector<std::size_t> to_input;  // y_j -> nearest x
    double sum_xy = 0.0, sum_yx = 0.0;
    nearest_assignment(cloud, t.reconstruction, to_recon, sum_xy);
    nearest_assignment(t.reconstruction, cloud, to_input, sum_yx);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double loss = sum_xy * inv_n + sum_yx * inv_n;

    // dL/dy, flattened to 3n
    std::vector<double> g_out(3 * n, 0.0);
    const double two_over_n = 2.0 * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = to_recon[i];
        const Vec3& x = cloud.points[i];
        const Vec3& y = t.reconstruction.points[j];
        g_out[3 * j] += two_over_n * (y.x - x.x);
        g_out[3 * j + 1] += two_over_n * (y.y - x.y);
        g_out[3 * j + 2] += two_over_n * (y.z - x.z);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const Vec3& x = cloud.points[to_input[j]];
        const Vec3& y = t.reconstruction.points[j];
        g_out[3 * j] += two_over_n * (y.x - x.x);
        g_out[3 * j + 1] += two_over_n * (y.y - x.y);
        g_out[3 * j + 2] += two_over_n * (y.z - x.z);
    }

    // dec3 (linear)
    std::vector<double> g_d2(kDec2, 0.0);
    for (std::size_t r = 0; r < 3 * n; ++r) {
        const double g = g_out[r];
        double* wrow = grad.dec3.weights.data() + r * kDec2;
        const double* w = m.dec3.weights.data() + r * kDec2;
        for (std::size_t c = 0; c < kDec2; ++c) {
            wrow[c] += g * t.d2[c];
            g_d2[c] += w[c] * g;
        }
        grad.dec3.bias[r] += g;
    }

    // dec2 (ReLU)
    std::vector<double> g_d1(kDec1, 0.0);
    for (std::size_t r = 0; r < kDec2; ++r) {
        const double g = t.pre_d2[r] > 0.0 ? g_d2[r] : 0.0;
        if (g == 0.0) continue;
        double* wrow = grad.dec2.weights.data() + r * kDec1;
        const double* w = m.dec2.weights.data() + r * kDec1;
        for (std::size_t c = 0; c < kDec1; ++c) {
            wrow[c] += g * t.d1[c];
            g_d1[c] += w[c] * g;
        }
        grad.dec2.bias[r] += g;
    }

    // dec1 (ReLU)
    std::vector<double> g_z(m.z_dim, 0.0);
    for (std::size_t r = 0; r < kDec1; ++r) {
        const double g = t.pre_d1[r] > 0.0 ? g_d1[r] : 0.0;
        if (g == 0.0) continue;
        double* wrow = grad.dec1.weights.data() + r * m.z_dim;
        const double* w = m.dec1.weights.data() + r * m.z_dim;
        for (std::size_t c = 0; c < m.z_dim; ++c) {
            wrow[c] += g * t.latent[c];
            g_z[c] += w[c] * g;
        }
        grad.dec1.bias[r] += g;
    }

    // bottleneck (linear)
    std::vector<double> g_pooled(kEnc2, 0.0);
    for (std::size_t r = 0; r < m.z_dim; ++r) {
        const double g = g_z[r];
        double* wrow = grad.bottleneck.weights.data() + r * kEnc2;
        const double* w = m.bottleneck.weights.data() + r * kEnc2;
        for (std::size_t c = 0; c < kEnc2; ++c) {
            wrow[c] += g * t.pooled[c];
            g_pooled[c] += w[c] * g;
        }
        grad.bottleneck.bias[r] += g;
    }

    // max-pool: each channel's gradient lands on its argmax point
    std::vector<double> g_h2(kEnc2);
    std::vector<double> g_h1(kEnc1);
    for (std::size_t i = 0; i < n; ++i) {
        bool touched = false;
        for (std::size_t c = 0; c < kEnc2; ++c) {
            const double g = (t.pool_argmax[c] == i) ? g_pooled[c] : 0.0;
            g_h2[c] = g;
            touched = touched || g != 0.0;
        }
        if (!touched) continue;

        const double* pre2 = t.pre2.data() + i * kEnc2;
        const double* h1 = t.h1.data() + i * kEnc1;
        std::fill(g_h1.begin(), g_h1.end(), 0.0);
        for (std::size_t r = 0; r < kEnc2; ++r) {
            const double g = pre2[r] > 0.0 ? g_h2[r] : 0.0;
            if (g == 0.0) continue;
            double* wrow = grad.enc2.weights.data() + r * kEnc1;
            const double* w = m.enc2.weights.data() + r * kEnc1;
            for (std::size_t c = 0; c < kEnc1; ++c) {
                wrow[c] += g * h1[c];
                g_h1[c] += w[c] * g;
            }
            grad.enc2.bias[r] += g;
        }

        const double* pre1 = t.pre1.data() + i * kEnc1;
        const Vec3& p = cloud.points[i];
        const double input[3] = {p.x, p.y, p.z};
        for (std::size_t r = 0; r < kEnc1; ++r) {
            const double g = pre1[r] > 0.0 ? g_h1[r] : 0.0;
            if (g == 0.0) continue;
            double* wrow = grad.enc1.weights.data() + r * 3;
            for (std::size_t c = 0; c < 3; ++c) wrow[c] += g * input[c];
            grad.enc1.bias[r] += g;
        }
    }

    return loss;
}

DenseLayer make_layer(std::size_t rows, std::size_t cols) {
    DenseLayer layer;
    layer.rows = rows;
    layer.cols = cols;
    layer.weights.assign(rows * cols, 0.0);
    layer.bias.assign(rows, 0.0);
    return layer;
}

void check_cloud(const AutoencoderModel& m, const PointCloud& cloud, const char* who) {
    if (cloud.size() != m.n_points)
        throw ValidationError(std::string(who) + ": cloud has " + std::to_string(cloud.size()) +
                              " points, model expects " + std::to_string(m.n_points));
}

void scale_parameters(AutoencoderModel& m, double factor) {
    for (DenseLayer* layer : layer_view(m)) {
        for (double& w : layer->weights) w *= factor;
        for (double& b : layer->bias) b *= factor;
    }
}

}  // namespace

std::array<DenseLayer*, 6> layer_view(AutoencoderModel& model) {
    return {&model.enc1, &model.enc2, &model.bottleneck,
            &model.dec1, &model.dec2, &model.dec3};
}

std::array<const DenseLayer*, 6> layer_view(const AutoencoderModel& model) {
    return {&model.enc1, &model.enc2, &model.bottleneck,
            &model.dec1, &model.dec2, &model.dec3};
}

ModelGradient zero_like(const AutoencoderModel& model) {
    ModelGradient zero = model;
    scale_parameters(zero, 0.0);
    return zero;
}

AutoencoderModel init_model(std::size_t n_points, std::size_t z_dim, std::uint64_t seed) {
    if (n_points == 0) throw ValidationError("init_model: n_points must be >= 1");
    if (z_dim == 0) throw ValidationError("init_model: z_dim must be >= 1");

    AutoencoderModel m;
    m.n_points = n_points;
    m.z_dim = z_dim;
    m.enc1 = make_layer(kEnc1, 3);
    m.enc2 = make_layer(kEnc2, kEnc1);
    m.bottleneck = make_layer(z_dim, kEnc2);
    m.dec1 = make_layer(kDec1, z_dim);
    m.dec2 = make_layer(kDec2, kDec1);
    m.dec3 = make_layer(3 * n_points, kDec2);

    Xoshiro256 rng(seed);
    for (DenseLayer* layer : layer_view(m)) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(layer->cols + layer->rows));
        for (double& w : layer->weights) w = rng.uniform(-bound, bound);
    }
    return m;
}

std::vector<double> encode(const AutoencoderModel& m, const PointCloud& cloud) {
    check_cloud(m, cloud, "encode");
    std::vector<double> h1(kEnc1), h2(kEnc2);
    std::vector<double> pooled(kEnc2, -std::numeric_limits<double>::infinity());
    for (const Vec3& p : cloud.points) {
        const double input[3] = {p.x, p.y, p.z};
        affine(m.enc1, input, h1.data());
        relu_inplace(h1.data(), kEnc1);
        affine(m.enc2, h1.data(), h2.data());
        relu_inplace(h2.data(), kEnc2);
        for (std::size_t c = 0; c < kEnc2; ++c) pooled[c] = std::max(pooled[c], h2[c]);
    }
    std::vector<double> z(m.z_dim);
    affine(m.bottleneck, pooled.data(), z.data());
    return z;
}

PointCloud decode(const AutoencoderModel& m, std::span<const double> z) {
    if (z.size() != m.z_dim)
        throw ValidationError("decode: latent dim " + std::to_string(z.size()) +
                              " != model z_dim " + std::to_string(m.z_dim));
    std::vector<double> d1(kDec1), d2(kDec2), out(3 * m.n_points);
    affine(m.dec1, z.data(), d1.data());
    relu_inplace(d1.data(), kDec1);
    affine(m.dec2, d1.data(), d2.data());
    relu_inplace(d2.data(), kDec2);
    affine(m.dec3, d2.data(), out.data());

    PointCloud cloud;
    cloud.points.resize(m.n_points);
    for (std::size_t i = 0; i < m.n_points; ++i)
        cloud.points[i] = {out[3 * i], out[3 * i + 1], out[3 * i + 2]};
    return cloud;
}

double reconstruction_error(const AutoencoderModel& m, const PointCloud& cloud) {
    check_cloud(m, cloud, "reconstruction_error");
    return chamfer_distance(cloud, decode(m, encode(m, cloud)));
}

ModelGradient loss_gradient(const AutoencoderModel& model, std::span<const PointCloud> batch) {
    if (batch.empty()) throw ValidationError("loss_gradient: empty batch");
    for (const PointCloud& cloud : batch) check_cloud(model, cloud, "loss_gradient");

    ModelGradient grad = zero_like(model);
    ForwardTrace trace;
    for (const PointCloud& cloud : batch) backward_into(model, cloud, trace, grad);
    scale_parameters(grad, 1.0 / static_cast<double>(batch.size()));
    return grad;
}

TrainResult train(const AutoencoderModel& initial, std::span<const PointCloud> corpus,
                  const TrainConfig& config) {
    if (corpus.empty()) throw ValidationError("train: empty corpus");
    for (const PointCloud& cloud : corpus) check_cloud(initial, cloud, "train");
    if (config.epochs == 0) throw ValidationError("train: epochs must be >= 1");
    if (config.batch_size == 0) throw ValidationError("train: batch_size must be >= 1");
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
        throw ValidationError("train: learning_rate must be finite and >= 0");

    TrainResult result;
    result.model = initial;
    ModelGradient adam_m = zero_like(initial);
    ModelGradient adam_v = zero_like(initial);
    std::size_t step = 0;

    const std::size_t n = corpus.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> sample_loss(n, 0.0);
    Xoshiro256 rng(config.seed);
    ForwardTrace trace;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates reshuffle per epoch, one stream for the whole run
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
            std::swap(order[i], order[j]);
        }

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const std::size_t batch_n = stop - start;

            ModelGradient grad = zero_like(result.model);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < stop; ++b) {
                const double loss =
                    backward_into(result.model, corpus[order[b]], trace, grad);
                sample_loss[order[b]] = loss;
                batch_loss += loss;
            }
            if (!std::isfinite(batch_loss))
                throw TrainingDivergedError(
                    epoch, "train: non-finite loss in epoch " + std::to_string(epoch));
            scale_parameters(grad, 1.0 / static_cast<double>(batch_n));

            ++step;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            const auto model_layers = layer_view(result.model);
            const auto grad_layers = layer_view(static_cast<const AutoencoderModel&>(grad));
            const auto m_layers = layer_view(adam_m);
            const auto v_layers = layer_view(adam_v);
            for (std::size_t l = 0; l < model_layers.size(); ++l) {
                auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                                  std::vector<double>& mm, std::vector<double>& vv) {
                    for (std::size_t i = 0; i < theta.size(); ++i) {
                        mm[i] = config.beta1 * mm[i] + (1.0 - config.beta1) * g[i];
                        vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * g[i] * g[i];
                        const double m_hat = mm[i] / bc1;
                        const double v_hat = vv[i] / bc2;
                        theta[i] -= config.learning_rate * m_hat /
                                    (std::sqrt(v_hat) + config.epsilon);
                    }
                };
                update(model_layers[l]->weights, grad_layers[l]->weights,
                       m_layers[l]->weights, v_layers[l]->weights);
                update(model_layers[l]->bias, grad_layers[l]->bias, m_layers[l]->bias,
                       v_layers[l]->bias);
            }
        }

        // canonical (shuffle-independent) epoch loss: sum in corpus order
        double epoch_sum = 0.0;
        for (double loss : sample_loss) epoch_sum += loss;
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
    }
    return result;
}

void save_model(const AutoencoderModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(kModelMagic, 4);
    bin::write_u32(out, kModelVersion);
    bin::write_u32(out, static_cast<std::uint32_t>(model.n_points));
    bin::write_u32(out, static_cast<std::uint32_t>(model.z_dim));
    for (const DenseLayer* layer : layer_view(model)) {
        bin::write_u32(out, static_cast<std::uint32_t>(layer->rows));
        bin::write_u32(out, static_cast<std::uint32_t>(layer->cols));
        for (double w : layer->weights) bin::write_f64(out, w);
        for (double b : layer->bias) bin::write_f64(out, b);
    }
    if (!out) throw IoError(path.string() + ": write failed");
}

AutoencoderModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    const std::string context = path.string();

    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kModelMagic, 4))
        throw IoError(context + ": bad magic, not an NCAE weight file");
    const std::uint32_t version = bin::read_u32(in, context);
    if (version != kModelVersion)
        throw IoError(context + ": unsupported weight file version " + std::to_string(version));

    const std::uint32_t n_points = bin::read_u32(in, context);
    const std::uint32_t z_dim = bin::read_u32(in, context);
    if (n_points == 0 || z_dim == 0) throw IoError(context + ": invalid dims in header");

    AutoencoderModel model;
    model.n_points = n_points;
    model.z_dim = z_dim;
    model.enc1 = make_layer(kEnc1, 3);
    model.enc2 = make_layer(kEnc2, kEnc1);
    model.bottleneck = make_layer(z_dim, kEnc2);
    model.dec1 = make_layer(kDec1, z_dim);
    model.dec2 = make_layer(kDec2, kDec1);
    model.dec3 = make_layer(3 * static_cast<std::size_t>(n_points), kDec2);

    for (DenseLayer* layer : layer_view(model)) {
        const std::uint32_t rows = bin::read_u32(in, context);
        const std::uint32_t cols = bin::read_u32(in, context);
        if (rows != layer->rows || cols != layer->cols)
            throw IoError(context + ": layer shape " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " does not match architecture");
        for (double& w : layer->weights) w = bin::read_f64(in, context);
        for (double& b : layer->bias) b = bin::read_f64(in, context);
    }
    for (const DenseLayer* layer : layer_view(model)) {
        for (double w : layer->weights)
            if (!std::isfinite(w)) throw IoError(context + ": non-finite weight");
        for (double b : layer->bias)
            if (!std::isfinite(b)) throw IoError(context + ": non-finite bias");
    }
    return model;
}

}  // namespace nc
