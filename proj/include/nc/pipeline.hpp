#pragma once

#include <filesystem>
#include <string>

#include "nc/config.hpp"
#include "nc/embedding.hpp"

namespace nc {

// Fixed layout of one run directory.
struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path corpus;        // corpus.ncpc
    std::filesystem::path weights;       // weights.ncae
    std::filesystem::path loss_history;  // loss_history.csv: epoch,mean_loss
    std::filesystem::path embeddings;    // embeddings.csv
    std::filesystem::path calibration;   // calibration.json
    std::filesystem::path fig2a;         // id,split,pc0,pc1
    std::filesystem::path fig2b;         // id,split,pc0,pc1,err
    std::filesystem::path fig3;          // id,nn_dist,err
    std::filesystem::path verdicts;      // id,nn_dist,predicted_err,decision

    std::filesystem::path fig4(std::size_t batch) const;  // id,pc0,pc1,nn_dist,category
};

RunPaths run_paths(const RunConfig& config);

// Deterministic synthetic corpus for the config: per sample, scale draws
// (per family rule), then a fresh generator seed, all from one stream
// seeded by config.seed; each cloud is normalized before storage.
Corpus build_corpus(const RunConfig& config);

// Replaces record latents with the vectors used for neighbor queries:
// optional 2-PC reduction, then optional per-dimension standardization,
// both fitted on the records whose ids are in `training_ids`.
EmbeddingSet apply_feature_space(const EmbeddingSet& embeddings,
                                 const std::vector<std::uint64_t>& training_ids,
                                 const NeighborConfig& neighbor);

// Pipeline commands. Each writes its artifacts under config.out_dir and
// returns the one-line summary the CLI prints on stdout.
std::string cmd_generate(const RunConfig& config);
std::string cmd_train(const RunConfig& config);
std::string cmd_embed(const RunConfig& config);
std::string cmd_fit(const RunConfig& config);
std::string cmd_score(const RunConfig& config);
std::string cmd_select(const RunConfig& config);
std::string cmd_report(const RunConfig& config);

// Parses arguments, dispatches one subcommand, and maps errors to exit
// codes: 0 success, 1 validation error, 2 I/O error, 3 training divergence.
int run_cli(int argc, const char* const* argv);

}  // namespace nc
