#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "nc/kdtree.hpp"

namespace nc {

// Monotone map from nearest-neighbor distance to expected reconstruction
// error, fitted by pool-adjacent-violators. Knots have strictly increasing
// distance and non-decreasing error; evaluation is piecewise-linear between
// knots and clamped to the end values outside their range.
struct DistanceErrorModel {
    struct Knot {
        double distance = 0.0;
        double error = 0.0;
    };

    std::vector<Knot> knots;
    std::size_t n_calibration = 0;
};

// Sorts pairs by (distance, error, input order), runs PAVA for the
// least-squares non-decreasing fit, and collapses each pooled block to one
// knot at (mean distance, block value). Adjacent knots that end up at the
// same distance are merged by weighted mean so knot distances stay strictly
// increasing. Throws ValidationError on fewer than 2 pairs, non-finite, or
// negative input.
DistanceErrorModel fit_distance_error(std::span<const std::pair<double, double>> pairs);

double predict_error(const DistanceErrorModel& model, double distance);

// Largest distance whose predicted error stays within tolerance, inverted in
// closed form from the knots. Returns 0 when even the first knot exceeds the
// tolerance, and +infinity (the trust-everything sentinel) when the last
// knot is within it.
double threshold_from_tolerance(const DistanceErrorModel& model, double tolerance);

struct BudgetThreshold {
    double threshold = 0.0;             // +infinity sentinel when budget == 0
    std::vector<std::uint64_t> selected;  // descending distance, ties by ascending id
};

// Picks min(budget, n) samples by descending distance (ties by ascending
// id); the threshold is the smallest selected distance.
BudgetThreshold threshold_from_budget(
    std::span<const std::pair<std::uint64_t, double>> distances, std::size_t budget);

enum class Decision { Trusted, Abstain };

const char* decision_name(Decision decision);

struct Verdict {
    std::uint64_t id = 0;
    double nn_dist = 0.0;
    double predicted_error = 0.0;
    Decision decision = Decision::Abstain;
};

// Trusted iff the (mean-of-k) neighbor distance is <= threshold.
Verdict judge(const NeighborIndex& index, std::span<const double> z,
              const DistanceErrorModel& model, double threshold, std::uint64_t id = 0,
              std::size_t k = 1);

// Spearman rho with average ranks for ties. Throws ValidationError on a
// length mismatch, fewer than 2 points, or an all-constant argument.
double rank_correlation(std::span<const double> xs, std::span<const double> ys);

// {"knots": [[distance, error], ...], "n_calibration": n}
void save_calibration_json(const DistanceErrorModel& model, const std::filesystem::path& path);
DistanceErrorModel load_calibration_json(const std::filesystem::path& path);

}  // namespace nc
