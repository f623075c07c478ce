#include "nc/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nc/errors.hpp"

namespace nc {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

}  // namespace

// Fixed-capacity candidate set ordered ascending by (squared distance, id).
// Linear insertion; k stays small in this artifact.
struct NeighborIndex::BestSet {
    struct Candidate {
        double dist_sq;
        std::uint64_t id;
    };

    explicit BestSet(std::size_t k) : capacity(k) { items.reserve(k); }

    static bool better(const Candidate& a, const Candidate& b) {
        return a.dist_sq < b.dist_sq || (a.dist_sq == b.dist_sq && a.id < b.id);
    }

    bool full() const { return items.size() == capacity; }
    double worst_dist_sq() const {
        return full() ? items.back().dist_sq : std::numeric_limits<double>::infinity();
    }

    void offer(double dist_sq, std::uint64_t id) {
        const Candidate c{dist_sq, id};
        if (full()) {
            if (!better(c, items.back())) return;
            items.pop_back();
        }
        auto pos = std::upper_bound(items.begin(), items.end(), c, better);
        items.insert(pos, c);
    }

    std::size_t capacity;
    std::vector<Candidate> items;
};

NeighborIndex build_index(std::vector<IndexedVector> records) {
    if (records.empty()) throw ValidationError("build_index: empty record set");

    NeighborIndex index;
    index.dimension_ = records.front().values.size();
    if (index.dimension_ == 0) throw ValidationError("build_index: zero-dimensional records");
    for (const IndexedVector& r : records)
        if (r.values.size() != index.dimension_)
            throw ValidationError("build_index: dimension mismatch for id " +
                                  std::to_string(r.id));

    std::sort(records.begin(), records.end(),
              [](const IndexedVector& a, const IndexedVector& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].id == records[i - 1].id)
            throw ValidationError("build_index: duplicate id " + std::to_string(records[i].id));

    index.records_ = std::move(records);
    index.nodes_.reserve(index.records_.size());
    std::vector<std::size_t> items(index.records_.size());
    for (std::size_t i = 0; i < items.size(); ++i) items[i] = i;
    index.root_ = index.build_subtree(items, 0, items.size());
    return index;
}

std::size_t NeighborIndex::build_subtree(std::vector<std::size_t>& items, std::size_t begin,
                                         std::size_t end) {
    if (begin == end) return kNone;

    // Axis of largest spread over this subset; ties take the lowest axis.
    std::size_t axis = 0;
    double best_spread = -1.0;
    for (std::size_t d = 0; d < dimension_; ++d) {
        double lo = records_[items[begin]].values[d];
        double hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
            const double v = records_[items[i]].values[d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double spread = hi - lo;
        if (spread > best_spread) {
            best_spread = spread;
            axis = d;
        }
    }

    std::sort(items.begin() + static_cast<std::ptrdiff_t>(begin),
              items.begin() + static_cast<std::ptrdiff_t>(end),
              [&](std::size_t a, std::size_t b) {
                  const double va = records_[a].values[axis];
                  const double vb = records_[b].values[axis];
                  if (va != vb) return va < vb;
                  return records_[a].id < records_[b].id;
              });

    const std::size_t mid = begin + (end - begin) / 2;
    const std::size_t node_id = nodes_.size();
    nodes_.push_back(Node{items[mid], axis, kNone, kNone});
    const std::size_t left = build_subtree(items, begin, mid);
    const std::size_t right = build_subtree(items, mid + 1, end);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
}

void NeighborIndex::search(std::size_t node_id, std::span<const double> query, BestSet& best,
                           std::vector<double>& axis_excess, double bound_sq,
                           std::size_t& visited) const {
    const Node& node = nodes_[node_id];
    const IndexedVector& record = records_[node.record];
    ++visited;
    best.offer(squared_distance(query, record.values), record.id);

    const double diff = query[node.axis] - record.values[node.axis];
    const std::size_t near_child = diff <= 0.0 ? node.left : node.right;
    const std::size_t far_child = diff <= 0.0 ? node.right : node.left;

    if (near_child != kNone)
        search(near_child, query, best, axis_excess, bound_sq, visited);

    if (far_child == kNone) return;
    // Lower bound for the far subtree: replace this axis' accumulated excess
    // with the distance to the splitting plane. Visiting on equality keeps
    // exactness under (distance, id) tie-breaking.
    const double plane_sq = diff * diff;
    const double far_bound = bound_sq - axis_excess[node.axis] + plane_sq;
    if (far_bound <= best.worst_dist_sq()) {
        const double saved = axis_excess[node.axis];
        axis_excess[node.axis] = plane_sq;
        search(far_child, query, best, axis_excess, far_bound, visited);
        axis_excess[node.axis] = saved;
    }
}

std::vector<NeighborHit> NeighborIndex::query_nearest(std::span<const double> query,
                                                      std::size_t k, QueryStats* stats) const {
    if (query.size() != dimension_)
        throw ValidationError("query_nearest: query dimension " + std::to_string(query.size()) +
                              " != index dimension " + std::to_string(dimension_));
    if (k < 1 || k > size())
        throw ValidationError("query_nearest: k=" + std::to_string(k) +
                              " out of range [1, " + std::to_string(size()) + "]");

    BestSet best(k);
    std::vector<double> axis_excess(dimension_, 0.0);
    std::size_t visited = 0;
    search(root_, query, best, axis_excess, 0.0, visited);
    if (stats != nullptr) stats->nodes_visited = visited;

    std::vector<NeighborHit> hits;
    hits.reserve(k);
    for (const auto& c : best.items) hits.push_back({c.id, std::sqrt(c.dist_sq)});
    return hits;
}

double NeighborIndex::nn_distance(std::span<const double> query) const {
    return query_nearest(query, 1).front().distance;
}

bool NeighborIndex::subtree_respects(std::size_t node_id, std::size_t axis, double coord,
                                     std::uint64_t id, bool left_side) const {
    if (node_id == kNone) return true;
    const Node& node = nodes_[node_id];
    const IndexedVector& record = records_[node.record];
    const double v = record.values[axis];
    const bool before = v < coord || (v == coord && record.id < id);
    if (left_side != before) return false;
    return subtree_respects(node.left, axis, coord, id, left_side) &&
           subtree_respects(node.right, axis, coord, id, left_side);
}

bool NeighborIndex::check_structure() const {
    for (const Node& node : nodes_) {
        const IndexedVector& record = records_[node.record];
        const double coord = record.values[node.axis];
        if (!subtree_respects(node.left, node.axis, coord, record.id, true)) return false;
        if (!subtree_respects(node.right, node.axis, coord, record.id, false)) return false;
    }
    return true;
}

double mean_neighbor_distance(const NeighborIndex& index, std::span<const double> query,
                              std::size_t k) {
    const auto hits = index.query_nearest(query, k);
    double sum = 0.0;
    for (const NeighborHit& h : hits) sum += h.distance;
    return sum / static_cast<double>(hits.size());
}

double leave_self_out_distance(const NeighborIndex& index, std::uint64_t self_id,
                               std::span<const double> query, std::size_t k) {
    if (index.size() < 2)
        throw ValidationError("leave_self_out_distance: index needs >= 2 records");
    const std::size_t want = std::min(index.size(), k + 1);
    const auto hits = index.query_nearest(query, want);
    double sum = 0.0;
    std::size_t taken = 0;
    for (const NeighborHit& h : hits) {
        if (h.id == self_id) continue;
        sum += h.distance;
        if (++taken == k) break;
    }
    if (taken == 0)
        throw ValidationError("leave_self_out_distance: no neighbor other than self");
    return sum / static_cast<double>(taken);
}

}  // namespace nc
