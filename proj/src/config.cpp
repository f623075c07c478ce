#include "nc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nc/errors.hpp"

namespace nc {

namespace {

using nlohmann::json;

json family_counts_to_json(const std::vector<FamilyCount>& groups) {
    json arr = json::array();
    for (const FamilyCount& g : groups) {
        json entry = {{"family", shape_family_name(g.family)}, {"count", g.count}};
        if (g.scale_min) entry["scale_min"] = *g.scale_min;
        if (g.scale_max) entry["scale_max"] = *g.scale_max;
        arr.push_back(std::move(entry));
    }
    return arr;
}

std::vector<FamilyCount> family_counts_from_json(const json& arr, const std::string& field) {
    if (!arr.is_array())
        throw ValidationError(field + ": expected an array of {family, count}");
    std::vector<FamilyCount> groups;
    for (const auto& entry : arr) {
        if (!entry.is_object() || !entry.contains("family") || !entry.contains("count"))
            throw ValidationError(field + ": entries need 'family' and 'count'");
        FamilyCount g;
        g.family = shape_family_from_name(entry["family"].get<std::string>());
        g.count = entry["count"].get<std::size_t>();
        if (entry.contains("scale_min")) g.scale_min = entry["scale_min"].get<double>();
        if (entry.contains("scale_max")) g.scale_max = entry["scale_max"].get<double>();
        groups.push_back(g);
    }
    return groups;
}

void validate_groups(const std::vector<FamilyCount>& groups, const CorpusConfig& corpus,
                     const std::string& field) {
    for (const FamilyCount& g : groups) {
        const double lo = g.scale_min.value_or(corpus.scale_min);
        const double hi = g.scale_max.value_or(corpus.scale_max);
        if (!(lo > 0.0) || !(hi >= lo))
            throw ValidationError("config: " + field + " group '" +
                                  shape_family_name(g.family) +
                                  "' needs 0 < scale_min <= scale_max");
    }
}

template <typename T>
T require(const json& doc, const std::string& field, const std::string& context) {
    if (!doc.contains(field))
        throw ValidationError(context + ": missing field '" + field + "'");
    try {
        return doc[field].get<T>();
    } catch (const json::exception&) {
        throw ValidationError(context + ": field '" + field + "' has the wrong type");
    }
}

}  // namespace

void validate_config(const RunConfig& config) {
    if (config.version != 1)
        throw ValidationError("config: unsupported version " + std::to_string(config.version));
    if (config.n_points == 0) throw ValidationError("config: n_points must be >= 1");
    if (config.z_dim == 0) throw ValidationError("config: z_dim must be >= 1");
    if (!(config.corpus.noise_sigma >= 0.0))
        throw ValidationError("config: corpus.noise_sigma must be >= 0");
    if (!(config.corpus.scale_min > 0.0) || !(config.corpus.scale_max >= config.corpus.scale_min))
        throw ValidationError("config: corpus scale range must satisfy 0 < scale_min <= scale_max");
    validate_groups(config.corpus.train, config.corpus, "corpus.train");
    validate_groups(config.corpus.new_split, config.corpus, "corpus.new");
    std::size_t train_total = 0;
    for (const FamilyCount& g : config.corpus.train) train_total += g.count;
    if (train_total < 2)
        throw ValidationError("config: corpus.train needs at least 2 samples");
    std::size_t new_total = 0;
    for (const FamilyCount& g : config.corpus.new_split) new_total += g.count;
    if (new_total == 0)
        throw ValidationError("config: corpus.new needs at least 1 sample");
    if (config.train.epochs == 0) throw ValidationError("config: train.epochs must be >= 1");
    if (config.train.batch_size == 0)
        throw ValidationError("config: train.batch_size must be >= 1");
    if (!(config.train.learning_rate >= 0.0) || !std::isfinite(config.train.learning_rate))
        throw ValidationError("config: train.learning_rate must be finite and >= 0");
    if (config.neighbor.k == 0) throw ValidationError("config: neighbor.k must be >= 1");
    if (!(config.tolerance >= 0.0))
        throw ValidationError("config: tolerance must be >= 0");
    if (config.batches == 0) throw ValidationError("config: batches must be >= 1");
    if (config.out_dir.empty()) throw ValidationError("config: out_dir must not be empty");
}

std::string config_to_json(const RunConfig& c) {
    json doc;
    doc["version"] = c.version;
    doc["seed"] = c.seed;
    doc["n_points"] = c.n_points;
    doc["z_dim"] = c.z_dim;
    doc["corpus"] = {{"train", family_counts_to_json(c.corpus.train)},
                     {"new", family_counts_to_json(c.corpus.new_split)},
                     {"noise_sigma", c.corpus.noise_sigma},
                     {"scale_min", c.corpus.scale_min},
                     {"scale_max", c.corpus.scale_max}};
    doc["train"] = {{"epochs", c.train.epochs},
                    {"learning_rate", c.train.learning_rate},
                    {"beta1", c.train.beta1},
                    {"beta2", c.train.beta2},
                    {"epsilon", c.train.epsilon},
                    {"batch_size", c.train.batch_size},
                    {"seed", c.train.seed}};
    doc["neighbor"] = {{"k", c.neighbor.k},
                       {"standardize", c.neighbor.standardize},
                       {"pca_space", c.neighbor.pca_space}};
    doc["tolerance"] = c.tolerance;
    doc["budget"] = c.budget;
    doc["batches"] = c.batches;
    doc["retrain"] = c.retrain;
    doc["out_dir"] = c.out_dir;
    return doc.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text, const std::string& context) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(context + ": invalid JSON (" + std::string(e.what()) + ")");
    }
    if (!doc.is_object()) throw IoError(context + ": config must be a JSON object");

    RunConfig c;
    c.version = require<std::uint32_t>(doc, "version", context);
    c.seed = require<std::uint64_t>(doc, "seed", context);
    c.n_points = require<std::size_t>(doc, "n_points", context);
    c.z_dim = require<std::size_t>(doc, "z_dim", context);

    if (!doc.contains("corpus") || !doc["corpus"].is_object())
        throw ValidationError(context + ": missing field 'corpus'");
    const json& corpus = doc["corpus"];
    if (!corpus.contains("train") || !corpus.contains("new"))
        throw ValidationError(context + ": corpus needs 'train' and 'new' family lists");
    c.corpus.train = family_counts_from_json(corpus["train"], context + ": corpus.train");
    c.corpus.new_split = family_counts_from_json(corpus["new"], context + ": corpus.new");
    c.corpus.noise_sigma = require<double>(corpus, "noise_sigma", context + ": corpus");
    c.corpus.scale_min = require<double>(corpus, "scale_min", context + ": corpus");
    c.corpus.scale_max = require<double>(corpus, "scale_max", context + ": corpus");

    if (!doc.contains("train") || !doc["train"].is_object())
        throw ValidationError(context + ": missing field 'train'");
    const json& train = doc["train"];
    c.train.epochs = require<std::size_t>(train, "epochs", context + ": train");
    c.train.learning_rate = require<double>(train, "learning_rate", context + ": train");
    c.train.beta1 = require<double>(train, "beta1", context + ": train");
    c.train.beta2 = require<double>(train, "beta2", context + ": train");
    c.train.epsilon = require<double>(train, "epsilon", context + ": train");
    c.train.batch_size = require<std::size_t>(train, "batch_size", context + ": train");
    c.train.seed = require<std::uint64_t>(train, "seed", context + ": train");

    if (!doc.contains("neighbor") || !doc["neighbor"].is_object())
        throw ValidationError(context + ": missing field 'neighbor'");
    const json& neighbor = doc["neighbor"];
    c.neighbor.k = require<std::size_t>(neighbor, "k", context + ": neighbor");
    c.neighbor.standardize = require<bool>(neighbor, "standardize", context + ": neighbor");
    c.neighbor.pca_space = require<bool>(neighbor, "pca_space", context + ": neighbor");

    c.tolerance = require<double>(doc, "tolerance", context);
    c.budget = require<std::size_t>(doc, "budget", context);
    c.batches = require<std::size_t>(doc, "batches", context);
    c.retrain = require<bool>(doc, "retrain", context);
    c.out_dir = require<std::string>(doc, "out_dir", context);

    validate_config(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str(), path.string());
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
    validate_config(config);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << config_to_json(config);
    if (!out) throw IoError(path.string() + ": write failed");
}

RunConfig demo_config() {
    RunConfig c;
    c.version = 1;
    c.seed = 20240811;
    c.n_points = 64;
    c.z_dim = 16;
    c.corpus.train = {{ShapeFamily::Sphere, 150}, {ShapeFamily::Ellipsoid, 150}};
    // out-of-distribution groups draw from a much wider scale range, so the
    // novel shapes are strongly anisotropic compared to the training families
    c.corpus.new_split = {{ShapeFamily::Sphere, 50},
                          {ShapeFamily::Ellipsoid, 50},
                          {ShapeFamily::Box, 50, 0.35, 2.2},
                          {ShapeFamily::Cylinder, 50, 0.35, 2.2}};
    c.corpus.noise_sigma = 0.02;
    c.corpus.scale_min = 0.8;
    c.corpus.scale_max = 1.2;
    c.train.epochs = 500;
    c.train.learning_rate = 1e-3;
    c.train.beta1 = 0.9;
    c.train.beta2 = 0.999;
    c.train.epsilon = 1e-8;
    c.train.batch_size = 16;
    c.train.seed = 7;
    c.neighbor.k = 1;
    c.neighbor.standardize = false;
    c.neighbor.pca_space = false;
    c.tolerance = 0.04;
    c.budget = 40;
    c.batches = 2;
    c.retrain = false;
    c.out_dir = "runs/demo";
    return c;
}

}  // namespace nc
