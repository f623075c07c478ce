#include "nc/expansion.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "nc/errors.hpp"

namespace nc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const EmbeddingRecord& record_for(const EmbeddingSet& embeddings, std::uint64_t id,
                                  const char* who) {
    const EmbeddingRecord* record = embeddings.find(id);
    if (record == nullptr)
        throw ValidationError(std::string(who) + ": no embedding for id " + std::to_string(id));
    return *record;
}

}  // namespace

const char* sample_category_name(SampleCategory category) {
    switch (category) {
        case SampleCategory::Training: return "Training";
        case SampleCategory::NovelTrusted: return "NovelTrusted";
        case SampleCategory::InsufficientNovelty: return "InsufficientNovelty";
        case SampleCategory::NovelAbstain: return "NovelAbstain";
    }
    return "?";
}

ExpansionState make_initial_state(const EmbeddingSet& embeddings) {
    ExpansionState state;
    for (const EmbeddingRecord& r : embeddings.records) {
        if (r.split == Split::Train)
            state.training_ids.push_back(r.id);
        else
            state.pool_ids.push_back(r.id);
    }
    std::sort(state.training_ids.begin(), state.training_ids.end());
    std::sort(state.pool_ids.begin(), state.pool_ids.end());
    return state;
}

SelectionReport categorize_batch(const ExpansionState& state, const EmbeddingSet& embeddings,
                                 std::size_t budget, double tolerance, std::size_t k) {
    if (state.pool_ids.empty()) throw ValidationError("categorize_batch: empty pool");
    if (state.training_ids.empty())
        throw ValidationError("categorize_batch: empty training set");

    std::vector<IndexedVector> train_vectors;
    train_vectors.reserve(state.training_ids.size());
    for (std::uint64_t id : state.training_ids) {
        const EmbeddingRecord& r = record_for(embeddings, id, "categorize_batch");
        train_vectors.push_back({id, r.z});
    }
    const NeighborIndex index = build_index(std::move(train_vectors));

    // Recalibrate on the current training set: leave-self-out distances
    // against reconstruction errors.
    std::vector<std::pair<double, double>> calibration_pairs;
    std::vector<std::pair<std::uint64_t, double>> train_distances;
    calibration_pairs.reserve(state.training_ids.size());
    for (std::uint64_t id : state.training_ids) {
        const EmbeddingRecord& r = record_for(embeddings, id, "categorize_batch");
        if (!r.error.has_value())
            throw ValidationError("categorize_batch: training id " + std::to_string(id) +
                                  " has no reconstruction error");
        const double dist = leave_self_out_distance(index, id, r.z, k);
        calibration_pairs.push_back({dist, *r.error});
        train_distances.push_back({id, dist});
    }
    const DistanceErrorModel calibration = fit_distance_error(calibration_pairs);

    SelectionReport report;
    report.batch_index = state.history.size();
    report.t_high = threshold_from_tolerance(calibration, tolerance);

    std::vector<std::pair<std::uint64_t, double>> pool_distances;
    pool_distances.reserve(state.pool_ids.size());
    for (std::uint64_t id : state.pool_ids) {
        const EmbeddingRecord& r = record_for(embeddings, id, "categorize_batch");
        pool_distances.push_back({id, mean_neighbor_distance(index, r.z, k)});
    }
    const BudgetThreshold cut = threshold_from_budget(pool_distances, budget);
    report.t_low = cut.threshold;
    const std::unordered_set<std::uint64_t> selected(cut.selected.begin(), cut.selected.end());

    report.entries.reserve(state.training_ids.size() + state.pool_ids.size());
    for (const auto& [id, dist] : train_distances)
        report.entries.push_back({id, dist, SampleCategory::Training});
    for (const auto& [id, dist] : pool_distances) {
        SampleCategory category = SampleCategory::InsufficientNovelty;
        if (selected.contains(id))
            category = dist <= report.t_high ? SampleCategory::NovelTrusted
                                             : SampleCategory::NovelAbstain;
        report.entries.push_back({id, dist, category});
    }
    return report;
}

ExpansionState apply_batch(ExpansionState state, const SelectionReport& report) {
    if (report.batch_index != state.history.size())
        throw ValidationError("apply_batch: report batch index " +
                              std::to_string(report.batch_index) + " does not match state");

    std::vector<std::uint64_t> report_training;
    std::vector<std::uint64_t> report_pool;
    std::vector<std::uint64_t> promoted;
    for (const SelectionEntry& e : report.entries) {
        if (e.category == SampleCategory::Training) {
            report_training.push_back(e.id);
        } else {
            report_pool.push_back(e.id);
            if (e.category != SampleCategory::InsufficientNovelty) promoted.push_back(e.id);
        }
    }
    std::sort(report_training.begin(), report_training.end());
    std::sort(report_pool.begin(), report_pool.end());
    if (report_training != state.training_ids || report_pool != state.pool_ids)
        throw ValidationError("apply_batch: report does not cover this state's samples");

    std::sort(promoted.begin(), promoted.end());
    std::vector<std::uint64_t> remaining;
    remaining.reserve(state.pool_ids.size() - promoted.size());
    std::set_difference(state.pool_ids.begin(), state.pool_ids.end(), promoted.begin(),
                        promoted.end(), std::back_inserter(remaining));

    state.training_ids.insert(state.training_ids.end(), promoted.begin(), promoted.end());
    std::sort(state.training_ids.begin(), state.training_ids.end());
    state.pool_ids = std::move(remaining);
    state.history.push_back(report);
    return state;
}

ExpansionResult run_expansion(ExpansionState initial, EmbeddingSet embeddings,
                              std::size_t batches, std::size_t budget, double tolerance,
                              std::size_t k, const RetrainHook& retrain,
                              const BatchObserver& observer) {
    if (batches == 0) throw ValidationError("run_expansion: batches must be >= 1");

    ExpansionState state = std::move(initial);
    for (std::size_t batch = 0; batch < batches; ++batch) {
        if (state.pool_ids.empty()) {
            // exhausted: record the no-op
            SelectionReport empty;
            empty.batch_index = state.history.size();
            empty.t_low = kInf;
            empty.t_high = kInf;
            if (observer) observer(empty, state, embeddings);
            state.history.push_back(empty);
            continue;
        }

        const SelectionReport report =
            categorize_batch(state, embeddings, budget, tolerance, k);
        if (observer) observer(report, state, embeddings);
        state = apply_batch(std::move(state), report);

        if (retrain && batch + 1 < batches && !state.pool_ids.empty())
            embeddings = retrain(state, batch + 1);
    }
    return {std::move(state), std::move(embeddings)};
}

}  // namespace nc
