#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nc/calibration.hpp"
#include "nc/embedding.hpp"

namespace nc {

enum class SampleCategory { Training, NovelTrusted, InsufficientNovelty, NovelAbstain };

const char* sample_category_name(SampleCategory category);

struct SelectionEntry {
    std::uint64_t id = 0;
    double nn_dist = 0.0;
    SampleCategory category = SampleCategory::Training;
};

// One expansion batch: every current sample appears exactly once. Training
// members keep their leave-self-out distance; pool members carry their
// distance to the current training set. t_low is the novelty cut from the
// labeling budget, t_high the confidence cut from the error tolerance.
struct SelectionReport {
    std::size_t batch_index = 0;
    std::vector<SelectionEntry> entries;
    double t_low = 0.0;
    double t_high = 0.0;
};

struct ExpansionState {
    std::vector<std::uint64_t> training_ids;  // ascending
    std::vector<std::uint64_t> pool_ids;      // ascending
    std::vector<SelectionReport> history;
};

// Training set = train split, pool = new split.
ExpansionState make_initial_state(const EmbeddingSet& embeddings);

// Builds an index over the current training embeddings, recalibrates the
// distance->error model on them (leave-self-out), and buckets every pool
// sample: within the budget cut and confidently reconstructable ->
// NovelTrusted; within the budget cut but beyond the tolerance ->
// NovelAbstain; outside the budget cut -> InsufficientNovelty.
// Training records must carry reconstruction errors.
SelectionReport categorize_batch(const ExpansionState& state, const EmbeddingSet& embeddings,
                                 std::size_t budget, double tolerance, std::size_t k = 1);

// Moves the selected (NovelTrusted + NovelAbstain) ids from the pool into
// the training set and appends the report to history. The report must have
// been produced from exactly this state.
ExpansionState apply_batch(ExpansionState state, const SelectionReport& report);

// Recomputes all embeddings after the training set grew (retraining from
// scratch lives behind this hook so the expansion loop stays independent of
// the autoencoder). Receives the post-apply state and the upcoming batch
// index.
using RetrainHook =
    std::function<EmbeddingSet(const ExpansionState& state, std::size_t next_batch)>;

// Observes each batch right after categorization, before the report is
// applied; the CLI uses this to emit per-batch report files.
using BatchObserver = std::function<void(const SelectionReport& report,
                                         const ExpansionState& state,
                                         const EmbeddingSet& embeddings)>;

struct ExpansionResult {
    ExpansionState state;
    EmbeddingSet embeddings;  // final embeddings (replaced per batch when retraining)
};

// Runs `batches` categorize/apply rounds. Once the pool is exhausted the
// remaining batches are recorded as empty reports. Deterministic end to end.
ExpansionResult run_expansion(ExpansionState initial, EmbeddingSet embeddings,
                              std::size_t batches, std::size_t budget, double tolerance,
                              std::size_t k = 1, const RetrainHook& retrain = nullptr,
                              const BatchObserver& observer = nullptr);

}  // namespace nc
