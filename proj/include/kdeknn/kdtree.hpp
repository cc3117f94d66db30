#pragma once

#include "kdeknn/error.hpp"
#include "kdeknn/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

namespace kdeknn {

struct Neighbor {
    std::size_t index;
    double distance;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact k-nearest-neighbour index over Euclidean distance.
///
/// Results are ordered by (squared distance, stored index), so equidistant
/// points resolve to the lower index exactly as a linear scan would. Nodes
/// keep tight bounding boxes; a subtree is skipped only when its box lies
/// strictly farther than the current k-th candidate.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(Matrix points, std::size_t leaf_size = 16)
        : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
        order_.resize(size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (size() > 0) {
            nodes_.reserve(2 * (size() / leaf_size_ + 1));
            build(0, size());
        }
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
    const Matrix& points() const noexcept { return points_; }

    /// k nearest stored points to x, ascending. `exclude` (if < size()) is
    /// treated as absent, which gives leave-one-out queries.
    std::vector<Neighbor> query(const double* x, std::size_t k,
                                std::size_t exclude = std::numeric_limits<std::size_t>::max()) const {
        const std::size_t available = size() - (exclude < size() ? 1 : 0);
        k = std::min(k, available);
        std::vector<Neighbor> out;
        if (k == 0) return out;
        Heap heap;
        search(0, x, k, exclude, heap);
        out.resize(heap.size());
        for (std::size_t r = heap.size(); r-- > 0;) {
            const auto [sq, idx] = heap.top();
            out[r] = {idx, std::sqrt(sq)};
            heap.pop();
        }
        return out;
    }

    std::vector<Neighbor> query(const Vector& x, std::size_t k,
                                std::size_t exclude = std::numeric_limits<std::size_t>::max()) const {
        if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionError("KdTree::query", dim(), x.size());
        return query(x.data(), k, exclude);
    }

private:
    using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)
    using Heap = std::priority_queue<Candidate>;        // max-heap: worst on top

    struct Node {
        std::size_t begin, end;
        std::size_t left = 0, right = 0;  // 0 = leaf (root is never a child)
        std::vector<double> lo, hi;
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end, 0, 0, {}, {}});
        const auto d = dim();
        std::vector<double> lo(d, std::numeric_limits<double>::infinity());
        std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
        for (std::size_t i = begin; i < end; ++i) {
            const double* p = points_.row(static_cast<Eigen::Index>(order_[i])).data();
            for (std::size_t j = 0; j < d; ++j) {
                lo[j] = std::min(lo[j], p[j]);
                hi[j] = std::max(hi[j], p[j]);
            }
        }
        std::size_t axis = 0;
        double spread = -1.0;
        for (std::size_t j = 0; j < d; ++j)
            if (hi[j] - lo[j] > spread) {
                spread = hi[j] - lo[j];
                axis = j;
            }
        nodes_[id].lo = std::move(lo);
        nodes_[id].hi = std::move(hi);
        if (end - begin <= leaf_size_ || spread <= 0.0) return id;

        const std::size_t mid = begin + (end - begin) / 2;
        const auto key = [&](std::size_t idx) { return points_(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(axis)); };
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             const double ka = key(a), kb = key(b);
                             return ka < kb || (ka == kb && a < b);
                         });
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    // Lower bound on the squared distance from x to anything inside the box.
    // Accumulated in the same order as squared_distance, so it never exceeds
    // the computed distance of any contained point.
    double box_distance(const Node& node, const double* x) const noexcept {
        double acc = 0.0;
        for (std::size_t j = 0; j < node.lo.size(); ++j) {
            double gap = 0.0;
            if (x[j] < node.lo[j])
                gap = node.lo[j] - x[j];
            else if (x[j] > node.hi[j])
                gap = x[j] - node.hi[j];
            acc += gap * gap;
        }
        return acc;
    }

    void search(std::size_t id, const double* x, std::size_t k, std::size_t exclude, Heap& heap) const {
        const Node& node = nodes_[id];
        if (heap.size() == k && box_distance(node, x) > heap.top().first) return;
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx == exclude) continue;
                const Candidate c{squared_distance(x, points_.row(static_cast<Eigen::Index>(idx)).data(), dim()), idx};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        const double dl = box_distance(nodes_[node.left], x);
        const double dr = box_distance(nodes_[node.right], x);
        if (dl <= dr) {
            search(node.left, x, k, exclude, heap);
            search(node.right, x, k, exclude, heap);
        } else {
            search(node.right, x, k, exclude, heap);
            search(node.left, x, k, exclude, heap);
        }
    }

    Matrix points_;
    std::size_t leaf_size_ = 16;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace kdeknn
