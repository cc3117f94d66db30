#pragma once

// Random forest of CART trees with Gini impurity.

#include "kdeknn/error.hpp"
#include "kdeknn/parallel.hpp"
#include "kdeknn/rng.hpp"
#include "kdeknn/types.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace kdeknn {

struct ForestParams {
    std::size_t n_trees = 500;
    std::size_t max_depth = 20;
    std::size_t max_features = 5;
    std::size_t min_samples_leaf = 5;
    std::size_t min_samples_split = 12;
    bool bootstrap = false;
};

class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1: leaf
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        double positive_fraction = 0.0;  // class-1 share of training rows reaching the node
        std::size_t samples = 0;
    };

    /// Grows one tree on rows `sample` of (x, y). Feature candidates at each
    /// split are drawn from rng; constant features are skipped without
    /// counting towards max_features.
    static DecisionTree grow(const Matrix& x, const Labels& y, std::vector<std::size_t> sample, const ForestParams& p,
                             Rng rng) {
        DecisionTree t;
        t.build(x, y, sample, 0, sample.size(), 0, p, rng);
        return t;
    }

    const Node& leaf_for(const double* row) const noexcept {
        std::size_t id = 0;
        while (nodes_[id].feature >= 0)
            id = row[nodes_[id].feature] <= nodes_[id].threshold ? nodes_[id].left : nodes_[id].right;
        return nodes_[id];
    }

    /// Majority class of the leaf; an even split votes 0.
    int vote(const double* row) const noexcept { return leaf_for(row).positive_fraction > 0.5 ? 1 : 0; }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            const auto [id, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (nodes_[id].feature >= 0) {
                stack.push_back({nodes_[id].left, d + 1});
                stack.push_back({nodes_[id].right, d + 1});
            }
        }
        return best;
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double weighted_gini = std::numeric_limits<double>::infinity();
    };

    std::size_t build(const Matrix& x, const Labels& y, std::vector<std::size_t>& sample, std::size_t begin,
                      std::size_t end, std::size_t depth, const ForestParams& p, Rng& rng) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();
        const std::size_t n = end - begin;
        std::size_t pos = 0;
        for (std::size_t i = begin; i < end; ++i) pos += static_cast<std::size_t>(y[sample[i]]);
        nodes_[id].samples = n;
        nodes_[id].positive_fraction = n == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(n);

        const bool pure = pos == 0 || pos == n;
        if (pure || depth >= p.max_depth || n < p.min_samples_split || n < 2 * p.min_samples_leaf) return id;

        const Split best = find_split(x, y, sample, begin, end, p, rng);
        if (best.feature < 0) return id;

        const auto f = static_cast<Eigen::Index>(best.feature);
        const auto mid_it = std::partition(sample.begin() + static_cast<std::ptrdiff_t>(begin),
                                           sample.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return x(static_cast<Eigen::Index>(r), f) <= best.threshold; });
        const auto mid = static_cast<std::size_t>(mid_it - sample.begin());
        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        const std::size_t left = build(x, y, sample, begin, mid, depth + 1, p, rng);
        const std::size_t right = build(x, y, sample, mid, end, depth + 1, p, rng);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    static Split find_split(const Matrix& x, const Labels& y, const std::vector<std::size_t>& sample,
                            std::size_t begin, std::size_t end, const ForestParams& p, Rng& rng) {
        const auto d = static_cast<std::size_t>(x.cols());
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), std::size_t{0});
        const std::size_t n = end - begin;
        std::vector<std::pair<double, int>> column(n);
        Split best;
        std::size_t evaluated = 0;
        // Partial Fisher-Yates: draw features one at a time until max_features
        // non-constant ones have been examined or none remain.
        for (std::size_t drawn = 0; drawn < d && evaluated < p.max_features; ++drawn) {
            const std::size_t pick = drawn + static_cast<std::size_t>(rng.uniform_index(d - drawn));
            std::swap(features[drawn], features[pick]);
            const auto f = static_cast<Eigen::Index>(features[drawn]);

            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t r = sample[begin + i];
                column[i] = {x(static_cast<Eigen::Index>(r), f), y[r]};
            }
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;  // constant here
            ++evaluated;

            std::size_t total_pos = 0;
            for (const auto& c : column) total_pos += static_cast<std::size_t>(c.second);
            std::size_t left_pos = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_pos += static_cast<std::size_t>(column[i].second);
                const std::size_t nl = i + 1, nr = n - nl;
                if (column[i].first == column[i + 1].first) continue;
                if (nl < p.min_samples_leaf || nr < p.min_samples_leaf) continue;
                const double score = weighted_gini(left_pos, nl) + weighted_gini(total_pos - left_pos, nr);
                if (score < best.weighted_gini) {
                    double thr = 0.5 * (column[i].first + column[i + 1].first);
                    if (thr >= column[i + 1].first) thr = column[i].first;
                    best = {static_cast<int>(f), thr, score};
                }
            }
        }
        return best;
    }

    // n * gini(node) = n - (pos^2 + neg^2) / n
    static double weighted_gini(std::size_t pos, std::size_t n) noexcept {
        const double dp = static_cast<double>(pos), dn = static_cast<double>(n), neg = dn - dp;
        return dn - (dp * dp + neg * neg) / dn;
    }

    std::vector<Node> nodes_;
};

class RandomForest {
public:
    /// Tree t is grown from the stream Rng(seed).child(t).
    static RandomForest fit(const Matrix& x, const Labels& y, const ForestParams& p, std::uint64_t seed, Exec exec = {}) {
        if (p.n_trees == 0 || p.max_features == 0 || p.min_samples_leaf == 0 || p.min_samples_split < 2)
            throw PreconditionError("RandomForest: invalid parameters");
        if (x.rows() == 0) throw InsufficientDataError("RandomForest: empty training data");
        RandomForest rf;
        rf.params_ = p;
        rf.trees_.resize(p.n_trees);
        const Rng root(seed, 0xF0E57);
        const auto n = static_cast<std::size_t>(x.rows());
        parallel_for(p.n_trees, exec, [&](std::size_t t) {
            Rng rng = root.child(t);
            std::vector<std::size_t> sample(n);
            if (p.bootstrap)
                for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_index(n));
            else
                std::iota(sample.begin(), sample.end(), std::size_t{0});
            rf.trees_[t] = DecisionTree::grow(x, y, std::move(sample), p, rng);
        });
        return rf;
    }

    /// Fraction of trees voting class 1.
    double score(const double* row) const noexcept {
        std::size_t votes = 0;
        for (const auto& t : trees_) votes += static_cast<std::size_t>(t.vote(row));
        return static_cast<double>(votes) / static_cast<double>(trees_.size());
    }

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
    const ForestParams& params() const noexcept { return params_; }

private:
    ForestParams params_;
    std::vector<DecisionTree> trees_;
};

}  // namespace kdeknn
