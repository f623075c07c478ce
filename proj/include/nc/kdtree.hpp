#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nc {

struct IndexedVector {
    std::uint64_t id = 0;
    std::vector<double> values;
};

struct NeighborHit {
    std::uint64_t id = 0;
    double distance = 0.0;  // Euclidean
};

struct QueryStats {
    std::size_t nodes_visited = 0;
};

// Exact nearest-neighbor index over a fixed record set. Records are sorted
// by id before construction, so the tree is independent of input order.
// Splits take the axis of largest spread; point order along an axis breaks
// coordinate ties by lower id. Immutable once built; queries are const and
// safe to run concurrently.
class NeighborIndex {
public:
    std::size_t size() const { return records_.size(); }
    std::size_t dimension() const { return dimension_; }
    const std::vector<IndexedVector>& records() const { return records_; }

    // Exact k nearest by Euclidean distance, ascending by (distance, id).
    // Pruning uses squared distances internally; returned distances are the
    // square roots. Throws ValidationError on k out of [1, size] or a
    // dimension mismatch.
    std::vector<NeighborHit> query_nearest(std::span<const double> query, std::size_t k,
                                           QueryStats* stats = nullptr) const;

    // query_nearest with k=1, returning just the distance.
    double nn_distance(std::span<const double> query) const;

    // Walks the whole tree verifying that each node's subtrees respect its
    // splitting plane (diagnostic; used by the structural tests).
    bool check_structure() const;

    friend NeighborIndex build_index(std::vector<IndexedVector> records);

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    struct Node {
        std::size_t record = 0;
        std::size_t axis = 0;
        std::size_t left = kNone;
        std::size_t right = kNone;
    };

    struct BestSet;

    std::size_t build_subtree(std::vector<std::size_t>& items, std::size_t begin,
                              std::size_t end);
    void search(std::size_t node_id, std::span<const double> query, BestSet& best,
                std::vector<double>& axis_excess, double bound_sq,
                std::size_t& visited) const;
    bool subtree_respects(std::size_t node_id, std::size_t axis, double coord,
                          std::uint64_t id, bool left_side) const;

    std::vector<IndexedVector> records_;
    std::vector<Node> nodes_;
    std::size_t root_ = kNone;
    std::size_t dimension_ = 0;
};

// Validates (nonempty, unique ids, consistent dims), canonicalizes by id,
// and builds the tree.
NeighborIndex build_index(std::vector<IndexedVector> records);

// Mean distance over the k nearest neighbors; the k=1 case is plain
// nearest-neighbor distance.
double mean_neighbor_distance(const NeighborIndex& index, std::span<const double> query,
                              std::size_t k);

// Mean distance over the k nearest neighbors excluding the record with
// `self_id`; used for leave-self-out calibration over training embeddings.
double leave_self_out_distance(const NeighborIndex& index, std::uint64_t self_id,
                               std::span<const double> query, std::size_t k);

}  // namespace nc
