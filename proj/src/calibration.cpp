#include "nc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "json.hpp"
#include "nc/errors.hpp"

namespace nc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // 1-based ranks i+1 .. j+1 averaged over the tied run
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

const char* decision_name(Decision decision) {
    return decision == Decision::Trusted ? "Trusted" : "Abstain";
}

DistanceErrorModel fit_distance_error(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2)
        throw ValidationError("fit_distance_error: need at least 2 pairs");
    for (const auto& [d, e] : pairs) {
        if (!std::isfinite(d) || !std::isfinite(e))
            throw ValidationError("fit_distance_error: non-finite input");
        if (d < 0.0 || e < 0.0)
            throw ValidationError("fit_distance_error: negative distance or error");
    }

    std::vector<std::pair<double, double>> sorted(pairs.begin(), pairs.end());
    std::stable_sort(sorted.begin(), sorted.end());

    // PAVA over the sorted sequence; each block tracks its distance and
    // error sums so merges stay O(1).
    struct Block {
        double sum_d;
        double sum_e;
        std::size_t count;
        double value;
    };
    std::vector<Block> blocks;
    blocks.reserve(sorted.size());
    for (const auto& [d, e] : sorted) {
        blocks.push_back({d, e, 1, e});
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].value > blocks.back().value) {
            Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            prev.sum_d += top.sum_d;
            prev.sum_e += top.sum_e;
            prev.count += top.count;
            prev.value = prev.sum_e / static_cast<double>(prev.count);
        }
    }

    DistanceErrorModel model;
    model.n_calibration = pairs.size();
    model.knots.reserve(blocks.size());
    std::vector<std::size_t> knot_weight;
    knot_weight.reserve(blocks.size());
    for (const Block& b : blocks) {
        const double distance = b.sum_d / static_cast<double>(b.count);
        // Blocks of identical mean distance collapse to one knot (weighted
        // mean) so knot distances stay strictly increasing.
        if (!model.knots.empty() && model.knots.back().distance == distance) {
            DistanceErrorModel::Knot& last = model.knots.back();
            std::size_t& w = knot_weight.back();
            last.error = (last.error * static_cast<double>(w) +
                          b.value * static_cast<double>(b.count)) /
                         static_cast<double>(w + b.count);
            w += b.count;
        } else {
            model.knots.push_back({distance, b.value});
            knot_weight.push_back(b.count);
        }
    }
    return model;
}

double predict_error(const DistanceErrorModel& model, double distance) {
    if (model.knots.empty()) throw ValidationError("predict_error: empty model");
    if (!std::isfinite(distance) || distance < 0.0)
        throw ValidationError("predict_error: distance must be finite and >= 0");

    const auto& knots = model.knots;
    if (distance <= knots.front().distance) return knots.front().error;
    if (distance >= knots.back().distance) return knots.back().error;
    // first knot with distance >= query; the segment [it-1, it] brackets it
    const auto it = std::lower_bound(
        knots.begin(), knots.end(), distance,
        [](const DistanceErrorModel::Knot& k, double d) { return k.distance < d; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (distance == hi.distance) return hi.error;
    const double t = (distance - lo.distance) / (hi.distance - lo.distance);
    return lo.error + t * (hi.error - lo.error);
}

double threshold_from_tolerance(const DistanceErrorModel& model, double tolerance) {
    if (model.knots.empty()) throw ValidationError("threshold_from_tolerance: empty model");
    if (!(tolerance >= 0.0))
        throw ValidationError("threshold_from_tolerance: tolerance must be >= 0");

    const auto& knots = model.knots;
    if (knots.back().error <= tolerance) return kInf;   // trust everything
    if (knots.front().error > tolerance) return 0.0;    // abstain on everything

    // Last knot within tolerance, then invert the linear segment to its
    // successor (which must exceed the tolerance).
    std::size_t j = 0;
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (knots[i].error <= tolerance) j = i;
    const auto& lo = knots[j];
    const auto& hi = knots[j + 1];
    const double t = (tolerance - lo.error) / (hi.error - lo.error);
    return lo.distance + t * (hi.distance - lo.distance);
}

BudgetThreshold threshold_from_budget(
    std::span<const std::pair<std::uint64_t, double>> distances, std::size_t budget) {
    BudgetThreshold result;
    if (budget == 0) {
        result.threshold = kInf;
        return result;
    }

    std::vector<std::pair<std::uint64_t, double>> order(distances.begin(), distances.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const std::size_t take = std::min(budget, order.size());
    result.selected.reserve(take);
    for (std::size_t i = 0; i < take; ++i) result.selected.push_back(order[i].first);
    result.threshold = take == 0 ? kInf : order[take - 1].second;
    return result;
}

Verdict judge(const NeighborIndex& index, std::span<const double> z,
              const DistanceErrorModel& model, double threshold, std::uint64_t id,
              std::size_t k) {
    Verdict verdict;
    verdict.id = id;
    verdict.nn_dist = mean_neighbor_distance(index, z, k);
    verdict.predicted_error = predict_error(model, verdict.nn_dist);
    verdict.decision = verdict.nn_dist <= threshold ? Decision::Trusted : Decision::Abstain;
    return verdict;
}

double rank_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw ValidationError("rank_correlation: length mismatch");
    if (xs.size() < 2)
        throw ValidationError("rank_correlation: need at least 2 points");
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw ValidationError("rank_correlation: non-finite input");

    const std::vector<double> rx = average_ranks(xs);
    const std::vector<double> ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mean_x += rx[i];
        mean_y += ry[i];
    }
    mean_x /= n;
    mean_y /= n;

    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean_x;
        const double dy = ry[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0)
        throw ValidationError("rank_correlation: undefined for constant input");
    return cov / std::sqrt(var_x * var_y);
}

void save_calibration_json(const DistanceErrorModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["n_calibration"] = model.n_calibration;
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& k : model.knots) knots.push_back({k.distance, k.error});
    doc["knots"] = std::move(knots);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError(path.string() + ": write failed");
}

DistanceErrorModel load_calibration_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": invalid JSON (" + e.what() + ")");
    }

    const std::string context = path.string();
    if (!doc.is_object() || !doc.contains("knots") || !doc.contains("n_calibration"))
        throw IoError(context + ": missing field 'knots' or 'n_calibration'");
    if (!doc["knots"].is_array() || doc["knots"].empty())
        throw IoError(context + ": field 'knots' must be a nonempty array");

    DistanceErrorModel model;
    model.n_calibration = doc["n_calibration"].get<std::size_t>();
    for (const auto& entry : doc["knots"]) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            throw IoError(context + ": field 'knots' entries must be [distance, error]");
        model.knots.push_back({entry[0].get<double>(), entry[1].get<double>()});
    }
    for (std::size_t i = 0; i < model.knots.size(); ++i) {
        const auto& k = model.knots[i];
        if (!std::isfinite(k.distance) || !std::isfinite(k.error) || k.distance < 0.0 ||
            k.error < 0.0)
            throw ValidationError(context + ": field 'knots' has a non-finite or negative value");
        if (i > 0 && (k.distance <= model.knots[i - 1].distance ||
                      k.error < model.knots[i - 1].error))
            throw ValidationError(context + ": field 'knots' must be strictly increasing in "
                                            "distance and non-decreasing in error");
    }
    return model;
}

}  // namespace nc
