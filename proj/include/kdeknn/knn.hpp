#pragma once

#include "kdeknn/error.hpp"
#include "kdeknn/kdtree.hpp"
#include "kdeknn/types.hpp"

#include <memory>
#include <vector>

namespace kdeknn {

inline constexpr std::size_t kDefaultValidatorK = 5;

/// Binary k-nearest-neighbour classifier. Immutable after construction; the
/// index is shared between copies.
class KnnModel {
public:
    KnnModel(const Matrix& points, Labels labels, std::size_t k) : labels_(std::move(labels)), k_(k) {
        if (points.rows() == 0) throw InsufficientDataError("KnnModel: empty training data");
        if (static_cast<std::size_t>(points.rows()) != labels_.size())
            throw DimensionError("KnnModel labels", static_cast<std::size_t>(points.rows()), labels_.size());
        if (k_ == 0) throw PreconditionError("KnnModel: k must be >= 1");
        if (k_ > labels_.size())
            throw PreconditionError("KnnModel: k (" + std::to_string(k_) + ") exceeds training size (" +
                                    std::to_string(labels_.size()) + ")");
        for (int y : labels_)
            if (y != 0 && y != 1) throw PreconditionError("KnnModel: labels must be binary");
        if (!points.allFinite()) throw PreconditionError("KnnModel: non-finite training features");
        index_ = std::make_shared<const KdTree>(points);
    }

    std::size_t k() const noexcept { return k_; }
    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return index_->dim(); }
    const Matrix& points() const noexcept { return index_->points(); }
    const Labels& labels() const noexcept { return labels_; }
    const KdTree& index() const noexcept { return *index_; }

    std::vector<Neighbor> kneighbors(const Vector& x, std::size_t k) const {
        if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionError("kneighbors", dim(), x.size());
        if (k == 0 || k > size()) throw PreconditionError("kneighbors: k must lie in [1, n]");
        return index_->query(x.data(), k);
    }

    /// Majority vote over the k nearest. A tied vote goes to the nearest
    /// neighbour's label (the ordering already breaks distance ties by index).
    int predict(const double* x) const {
        const auto nn = index_->query(x, k_);
        std::size_t ones = 0;
        for (const auto& n : nn) ones += static_cast<std::size_t>(labels_[n.index]);
        const std::size_t zeros = nn.size() - ones;
        if (ones != zeros) return ones > zeros ? 1 : 0;
        return nn.empty() ? 0 : labels_[nn.front().index];
    }

    int predict(const Vector& x) const {
        if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionError("predict", dim(), x.size());
        return predict(x.data());
    }

private:
    Labels labels_;
    std::size_t k_;
    std::shared_ptr<const KdTree> index_;
};

}  // namespace kdeknn
