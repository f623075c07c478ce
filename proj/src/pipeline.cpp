#include "nc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nc/autoencoder.hpp"
#include "nc/calibration.hpp"
#include "nc/errors.hpp"
#include "nc/expansion.hpp"
#include "nc/kdtree.hpp"
#include "nc/log.hpp"
#include "nc/rng.hpp"
#include "nc/text.hpp"

namespace nc {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    return out;
}

void finish_out(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<const EmbeddingRecord*> split_records(const EmbeddingSet& set, Split split) {
    std::vector<const EmbeddingRecord*> records;
    for (const EmbeddingRecord& r : set.records)
        if (r.split == split) records.push_back(&r);
    std::sort(records.begin(), records.end(),
              [](const EmbeddingRecord* a, const EmbeddingRecord* b) { return a->id < b->id; });
    return records;
}

NeighborIndex index_over(const EmbeddingSet& set,
                         const std::vector<std::uint64_t>& training_ids) {
    std::vector<IndexedVector> vectors;
    vectors.reserve(training_ids.size());
    for (std::uint64_t id : training_ids) {
        const EmbeddingRecord* r = set.find(id);
        if (r == nullptr)
            throw ValidationError("no embedding record for training id " + std::to_string(id));
        vectors.push_back({id, r->z});
    }
    return build_index(std::move(vectors));
}

std::vector<std::uint64_t> ids_of(const std::vector<const EmbeddingRecord*>& records) {
    std::vector<std::uint64_t> ids;
    ids.reserve(records.size());
    for (const EmbeddingRecord* r : records) ids.push_back(r->id);
    return ids;
}

double require_error(const EmbeddingRecord& r, const std::string& context) {
    if (!r.error.has_value())
        throw ValidationError(context + ": field err is empty for id " + std::to_string(r.id) +
                              " (run embed first)");
    return *r.error;
}

// PCA of the raw training latents used for every figure report; the figures
// always carry exactly the two most principal components.
PcaModel report_pca(const EmbeddingSet& embeddings,
                    const std::vector<std::uint64_t>& training_ids) {
    if (embeddings.z_dim < 2)
        throw ValidationError("figure reports need z_dim >= 2 for two principal components");
    std::vector<LatentVector> latents;
    latents.reserve(training_ids.size());
    for (std::uint64_t id : training_ids) {
        const EmbeddingRecord* r = embeddings.find(id);
        if (r == nullptr)
            throw ValidationError("no embedding record for training id " + std::to_string(id));
        latents.push_back(r->z);
    }
    return pca_fit(latents, 2);
}

AutoencoderModel train_on_ids(const Corpus& corpus, const std::vector<std::uint64_t>& ids,
                              const RunConfig& config, std::uint64_t seed,
                              std::vector<double>* epoch_loss = nullptr) {
    std::vector<PointCloud> clouds;
    clouds.reserve(ids.size());
    for (std::uint64_t id : ids) {
        const auto it = std::find_if(corpus.entries.begin(), corpus.entries.end(),
                                     [&](const CorpusEntry& e) { return e.id == id; });
        if (it == corpus.entries.end())
            throw ValidationError("corpus has no cloud for id " + std::to_string(id));
        clouds.push_back(it->cloud);
    }
    TrainConfig train_config = config.train;
    train_config.seed = seed;
    TrainResult result = train(init_model(config.n_points, config.z_dim, seed), clouds,
                               train_config);
    if (epoch_loss != nullptr) *epoch_loss = result.epoch_loss;
    return result.model;
}

EmbeddingSet embed_corpus(const Corpus& corpus, const AutoencoderModel& model) {
    EmbeddingSet set;
    set.z_dim = model.z_dim;
    set.records.reserve(corpus.entries.size());
    for (const CorpusEntry& entry : corpus.entries) {
        EmbeddingRecord record;
        record.id = entry.id;
        record.split = entry.split;
        record.z = encode(model, entry.cloud);
        record.error = reconstruction_error(model, entry.cloud);
        set.records.push_back(std::move(record));
    }
    return set;
}

std::string family_count_summary(const std::vector<FamilyCount>& groups) {
    std::ostringstream out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (i > 0) out << ' ';
        out << shape_family_name(groups[i].family) << '=' << groups[i].count;
    }
    return out.str();
}

}  // namespace

std::filesystem::path RunPaths::fig4(std::size_t batch) const {
    return dir / ("fig4_batch" + std::to_string(batch) + ".csv");
}

RunPaths run_paths(const RunConfig& config) {
    RunPaths paths;
    paths.dir = config.out_dir;
    paths.corpus = paths.dir / "corpus.ncpc";
    paths.weights = paths.dir / "weights.ncae";
    paths.loss_history = paths.dir / "loss_history.csv";
    paths.embeddings = paths.dir / "embeddings.csv";
    paths.calibration = paths.dir / "calibration.json";
    paths.fig2a = paths.dir / "fig2a.csv";
    paths.fig2b = paths.dir / "fig2b.csv";
    paths.fig3 = paths.dir / "fig3.csv";
    paths.verdicts = paths.dir / "verdicts.csv";
    return paths;
}

Corpus build_corpus(const RunConfig& config) {
    validate_config(config);
    Xoshiro256 rng(config.seed);
    Corpus corpus;
    corpus.n_points = config.n_points;
    std::uint64_t next_id = 0;

    const auto emit_group = [&](const FamilyCount& group, Split split) {
        for (std::size_t i = 0; i < group.count; ++i) {
            ShapeSpec spec;
            spec.family = group.family;
            spec.noise_sigma = config.corpus.noise_sigma;
            const double lo = group.scale_min.value_or(config.corpus.scale_min);
            const double hi = group.scale_max.value_or(config.corpus.scale_max);
            switch (group.family) {
                case ShapeFamily::Sphere: {
                    const double r = rng.uniform(lo, hi);
                    spec.scale = {r, r, r};
                    break;
                }
                case ShapeFamily::Ellipsoid:
                case ShapeFamily::Box:
                    spec.scale = {rng.uniform(lo, hi), rng.uniform(lo, hi),
                                  rng.uniform(lo, hi)};
                    break;
                case ShapeFamily::Cylinder: {
                    const double r = 0.5 * rng.uniform(lo, hi);
                    const double h = rng.uniform(lo, hi);
                    spec.scale = {r, r, h};
                    break;
                }
            }
            spec.seed = rng.next_u64();
            corpus.entries.push_back(
                {next_id++, split, normalize_cloud(generate_cloud(spec, config.n_points))});
        }
    };
    for (const FamilyCount& group : config.corpus.train) emit_group(group, Split::Train);
    for (const FamilyCount& group : config.corpus.new_split) emit_group(group, Split::New);
    return corpus;
}

EmbeddingSet apply_feature_space(const EmbeddingSet& embeddings,
                                 const std::vector<std::uint64_t>& training_ids,
                                 const NeighborConfig& neighbor) {
    EmbeddingSet features = embeddings;
    if (neighbor.pca_space) {
        const PcaModel pca = report_pca(embeddings, training_ids);
        for (EmbeddingRecord& r : features.records) r.z = pca_transform(pca, r.z);
        features.z_dim = 2;
    }
    if (neighbor.standardize) {
        const std::size_t dim = features.z_dim;
        std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
        std::size_t n = 0;
        for (std::uint64_t id : training_ids) {
            const EmbeddingRecord* r = features.find(id);
            if (r == nullptr)
                throw ValidationError("no embedding record for training id " +
                                      std::to_string(id));
            for (std::size_t d = 0; d < dim; ++d) mean[d] += r->z[d];
            ++n;
        }
        if (n < 2) throw ValidationError("standardize: need at least 2 training records");
        for (double& m : mean) m /= static_cast<double>(n);
        for (std::uint64_t id : training_ids) {
            const EmbeddingRecord& r = *features.find(id);
            for (std::size_t d = 0; d < dim; ++d) {
                const double delta = r.z[d] - mean[d];
                sd[d] += delta * delta;
            }
        }
        for (double& s : sd) {
            s = std::sqrt(s / static_cast<double>(n - 1));
            if (s == 0.0) s = 1.0;  // constant dimension: leave unscaled
        }
        for (EmbeddingRecord& r : features.records)
            for (std::size_t d = 0; d < dim; ++d) r.z[d] = (r.z[d] - mean[d]) / sd[d];
    }
    return features;
}

std::string cmd_generate(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    fs::create_directories(paths.dir);
    const Corpus corpus = build_corpus(config);
    save_corpus(corpus, paths.corpus);
    log::info("wrote corpus to " + paths.corpus.string());

    std::size_t train_total = 0, new_total = 0;
    for (const FamilyCount& g : config.corpus.train) train_total += g.count;
    for (const FamilyCount& g : config.corpus.new_split) new_total += g.count;
    std::ostringstream summary;
    summary << "generate: " << corpus.entries.size() << " clouds (n_points=" << config.n_points
            << ") train=" << train_total << " [" << family_count_summary(config.corpus.train)
            << "] new=" << new_total << " [" << family_count_summary(config.corpus.new_split)
            << "] -> " << paths.corpus.string();
    return summary.str();
}

std::string cmd_train(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    const Corpus corpus = load_corpus(paths.corpus);
    if (corpus.n_points != config.n_points)
        throw ValidationError(paths.corpus.string() + ": corpus n_points " +
                              std::to_string(corpus.n_points) + " != config n_points " +
                              std::to_string(config.n_points));

    std::vector<std::uint64_t> train_ids;
    for (const CorpusEntry& e : corpus.entries)
        if (e.split == Split::Train) train_ids.push_back(e.id);
    std::sort(train_ids.begin(), train_ids.end());
    if (train_ids.empty())
        throw ValidationError(paths.corpus.string() + ": corpus has no train-split clouds");

    std::vector<double> epoch_loss;
    const AutoencoderModel model =
        train_on_ids(corpus, train_ids, config, config.train.seed, &epoch_loss);
    save_model(model, paths.weights);

    std::ofstream out = open_out(paths.loss_history);
    out << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < epoch_loss.size(); ++e)
        out << e << ',' << format_double(epoch_loss[e]) << '\n';
    finish_out(out, paths.loss_history);

    std::ostringstream summary;
    summary << "train: " << config.train.epochs << " epochs on " << train_ids.size()
            << " clouds, mean loss " << format_double(epoch_loss.front()) << " -> "
            << format_double(epoch_loss.back()) << " -> " << paths.weights.string();
    return summary.str();
}

std::string cmd_embed(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    const Corpus corpus = load_corpus(paths.corpus);
    const AutoencoderModel model = load_model(paths.weights);
    if (model.n_points != corpus.n_points)
        throw ValidationError(paths.weights.string() + ": model n_points " +
                              std::to_string(model.n_points) + " != corpus n_points " +
                              std::to_string(corpus.n_points));
    if (model.z_dim != config.z_dim)
        throw ValidationError(paths.weights.string() + ": model z_dim " +
                              std::to_string(model.z_dim) + " != config z_dim " +
                              std::to_string(config.z_dim));

    const EmbeddingSet set = embed_corpus(corpus, model);
    save_embeddings_csv(set, paths.embeddings);

    std::ostringstream summary;
    summary << "embed: " << set.records.size() << " latents (z_dim=" << set.z_dim << ") -> "
            << paths.embeddings.string();
    return summary.str();
}

std::string cmd_fit(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    const EmbeddingSet raw = load_embeddings_csv(paths.embeddings);
    const auto train_records = split_records(raw, Split::Train);
    const auto new_records = split_records(raw, Split::New);
    if (train_records.size() < 2)
        throw ValidationError(paths.embeddings.string() + ": need >= 2 train-split records");
    if (new_records.empty())
        throw ValidationError(paths.embeddings.string() + ": need >= 1 new-split record");

    const std::vector<std::uint64_t> train_ids = ids_of(train_records);
    const EmbeddingSet features = apply_feature_space(raw, train_ids, config.neighbor);
    const NeighborIndex index = index_over(features, train_ids);

    std::vector<std::pair<double, double>> calibration_pairs;
    calibration_pairs.reserve(train_ids.size());
    for (std::uint64_t id : train_ids) {
        const EmbeddingRecord& raw_record = *raw.find(id);
        const EmbeddingRecord& feat_record = *features.find(id);
        const double dist = leave_self_out_distance(index, id, feat_record.z, config.neighbor.k);
        calibration_pairs.push_back(
            {dist, require_error(raw_record, paths.embeddings.string())});
    }
    const DistanceErrorModel calibration = fit_distance_error(calibration_pairs);
    save_calibration_json(calibration, paths.calibration);

    std::ofstream out = open_out(paths.fig3);
    out << "id,nn_dist,err\n";
    std::vector<double> dists, errors;
    for (const EmbeddingRecord* r : new_records) {
        const EmbeddingRecord& feat = *features.find(r->id);
        const double dist = mean_neighbor_distance(index, feat.z, config.neighbor.k);
        const double err = require_error(*r, paths.embeddings.string());
        dists.push_back(dist);
        errors.push_back(err);
        out << r->id << ',' << format_double(dist) << ',' << format_double(err) << '\n';
    }
    finish_out(out, paths.fig3);

    const double rho = rank_correlation(dists, errors);
    std::ostringstream summary;
    summary << "fit: " << calibration.knots.size() << " knots from " << train_ids.size()
            << " train samples, spearman(nn_dist,err)=" << format_double(rho) << " over "
            << new_records.size() << " new samples -> " << paths.calibration.string();
    return summary.str();
}

std::string cmd_score(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    const EmbeddingSet raw = load_embeddings_csv(paths.embeddings);
    const DistanceErrorModel calibration = load_calibration_json(paths.calibration);
    const auto train_records = split_records(raw, Split::Train);
    const auto new_records = split_records(raw, Split::New);
    if (train_records.empty())
        throw ValidationError(paths.embeddings.string() + ": need train-split records");

    const std::vector<std::uint64_t> train_ids = ids_of(train_records);
    const EmbeddingSet features = apply_feature_space(raw, train_ids, config.neighbor);
    const NeighborIndex index = index_over(features, train_ids);
    const double threshold = threshold_from_tolerance(calibration, config.tolerance);

    std::size_t trusted = 0;
    std::ofstream out = open_out(paths.verdicts);
    out << "id,nn_dist,predicted_err,decision\n";
    for (const EmbeddingRecord* r : new_records) {
        const EmbeddingRecord& feat = *features.find(r->id);
        const Verdict verdict =
            judge(index, feat.z, calibration, threshold, r->id, config.neighbor.k);
        if (verdict.decision == Decision::Trusted) ++trusted;
        out << verdict.id << ',' << format_double(verdict.nn_dist) << ','
            << format_double(verdict.predicted_error) << ','
            << decision_name(verdict.decision) << '\n';
    }
    finish_out(out, paths.verdicts);

    std::ostringstream summary;
    summary << "score: tolerance=" << format_double(config.tolerance)
            << " threshold=" << format_double(threshold) << " trusted=" << trusted
            << " abstain=" << new_records.size() - trusted << " -> "
            << paths.verdicts.string();
    return summary.str();
}

std::string cmd_select(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    EmbeddingSet raw = load_embeddings_csv(paths.embeddings);
    // the calibration artifact is a required, validated input; each batch
    // then recalibrates on its current training set (batch 0 reproduces it)
    load_calibration_json(paths.calibration);

    const ExpansionState initial = make_initial_state(raw);
    if (initial.training_ids.empty() || initial.pool_ids.empty())
        throw ValidationError(paths.embeddings.string() +
                              ": select needs both train-split and new-split records");

    Corpus corpus;
    if (config.retrain) corpus = load_corpus(paths.corpus);

    const bool per_batch_features = config.neighbor.pca_space || config.neighbor.standardize;
    RetrainHook hook;
    if (config.retrain || per_batch_features) {
        hook = [&](const ExpansionState& state, std::size_t next_batch) {
            if (config.retrain) {
                // from-scratch retrain on the grown training set; the seed
                // advances deterministically per batch
                const std::uint64_t seed = config.train.seed + next_batch;
                log::info("retraining for batch " + std::to_string(next_batch));
                raw = embed_corpus(corpus,
                                   train_on_ids(corpus, state.training_ids, config, seed));
            }
            return apply_feature_space(raw, state.training_ids, config.neighbor);
        };
    }

    std::vector<std::string> batch_summaries;
    const BatchObserver observer = [&](const SelectionReport& report,
                                       const ExpansionState& state,
                                       const EmbeddingSet& embeddings) {
        (void)embeddings;
        const fs::path path = paths.fig4(report.batch_index);
        std::ofstream out = open_out(path);
        out << "id,pc0,pc1,nn_dist,category\n";
        if (!report.entries.empty()) {
            const PcaModel pca = report_pca(raw, state.training_ids);
            for (const SelectionEntry& e : report.entries) {
                const EmbeddingRecord* r = raw.find(e.id);
                if (r == nullptr)
                    throw ValidationError("no embedding record for id " + std::to_string(e.id));
                const auto pc = pca_transform(pca, r->z);
                out << e.id << ',' << format_double(pc[0]) << ',' << format_double(pc[1]) << ','
                    << format_double(e.nn_dist) << ',' << sample_category_name(e.category)
                    << '\n';
            }
        }
        finish_out(out, path);

        std::size_t trusted = 0, abstain = 0, insufficient = 0;
        for (const SelectionEntry& e : report.entries) {
            if (e.category == SampleCategory::NovelTrusted) ++trusted;
            if (e.category == SampleCategory::NovelAbstain) ++abstain;
            if (e.category == SampleCategory::InsufficientNovelty) ++insufficient;
        }
        std::ostringstream line;
        line << "batch" << report.batch_index << "[trusted=" << trusted
             << " abstain=" << abstain << " insufficient=" << insufficient << "]";
        batch_summaries.push_back(line.str());
    };

    EmbeddingSet features = apply_feature_space(raw, initial.training_ids, config.neighbor);
    const ExpansionResult result =
        run_expansion(initial, std::move(features), config.batches, config.budget,
                      config.tolerance, config.neighbor.k, hook, observer);

    std::ostringstream summary;
    summary << "select: budget=" << config.budget
            << " tolerance=" << format_double(config.tolerance);
    for (const std::string& line : batch_summaries) summary << ' ' << line;
    summary << " training " << initial.training_ids.size() << " -> "
            << result.state.training_ids.size() << " -> "
            << (paths.dir / "fig4_batch*.csv").string();
    return summary.str();
}

std::string cmd_report(const RunConfig& config) {
    validate_config(config);
    const RunPaths paths = run_paths(config);
    const EmbeddingSet raw = load_embeddings_csv(paths.embeddings);
    const auto train_records = split_records(raw, Split::Train);
    const auto new_records = split_records(raw, Split::New);
    if (train_records.size() < 2)
        throw ValidationError(paths.embeddings.string() + ": need >= 2 train-split records");

    const PcaModel pca = report_pca(raw, ids_of(train_records));

    std::ofstream fig2a = open_out(paths.fig2a);
    fig2a << "id,split,pc0,pc1\n";
    for (const EmbeddingRecord& r : raw.records) {
        const auto pc = pca_transform(pca, r.z);
        fig2a << r.id << ',' << split_name(r.split) << ',' << format_double(pc[0]) << ','
              << format_double(pc[1]) << '\n';
    }
    finish_out(fig2a, paths.fig2a);

    std::ofstream fig2b = open_out(paths.fig2b);
    fig2b << "id,split,pc0,pc1,err\n";
    for (const EmbeddingRecord* r : new_records) {
        const auto pc = pca_transform(pca, r->z);
        fig2b << r->id << ',' << split_name(r->split) << ',' << format_double(pc[0]) << ','
              << format_double(pc[1]) << ','
              << format_double(require_error(*r, paths.embeddings.string())) << '\n';
    }
    finish_out(fig2b, paths.fig2b);

    std::ostringstream summary;
    summary << "report: " << raw.records.size() << " samples ("
            << new_records.size() << " new) with 2 principal components -> "
            << paths.fig2a.string() << ", " << paths.fig2b.string();
    return summary.str();
}

}  // namespace nc
