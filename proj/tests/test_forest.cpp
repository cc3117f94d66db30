#include "kdeknn/forest.hpp"
#include "kdeknn/metrics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>

using namespace kdeknn;

namespace {

struct Blobs {
    Matrix x;
    Labels y;
};

Blobs blobs(std::mt19937_64& gen, int n, int d, double shift) {
    Blobs b{oracle::random_matrix(gen, n, d), Labels(static_cast<std::size_t>(n))};
    for (int i = 0; i < n; ++i) {
        b.y[static_cast<std::size_t>(i)] = i % 2;
        b.x(i, 0) += shift * (i % 2);
        b.x(i, 1) += shift * (i % 2);
    }
    return b;
}

ForestParams small(std::size_t trees) {
    ForestParams p;
    p.n_trees = trees;
    return p;
}

}  // namespace

TEST(Tree, RespectsLeafAndDepthLimits) {
    std::mt19937_64 gen(1);
    const auto b = blobs(gen, 300, 6, 1.0);
    ForestParams p;
    p.max_depth = 4;
    std::vector<std::size_t> rows(300);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto t = DecisionTree::grow(b.x, b.y, rows, p, Rng(2));
    EXPECT_LE(t.depth(), 4u);
    for (const auto& n : t.nodes()) {
        EXPECT_GE(n.samples, p.min_samples_leaf);
        if (n.feature >= 0) EXPECT_GE(n.samples, p.min_samples_split);
    }
}

// Every training row reaches a leaf whose recorded statistics include it.
TEST(Tree, LeafStatisticsReplay) {
    std::mt19937_64 gen(3);
    const auto b = blobs(gen, 200, 5, 1.5);
    std::vector<std::size_t> rows(200);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto t = DecisionTree::grow(b.x, b.y, rows, ForestParams{}, Rng(4));
    std::map<const DecisionTree::Node*, std::pair<std::size_t, std::size_t>> seen;
    for (int i = 0; i < 200; ++i) {
        auto& s = seen[&t.leaf_for(b.x.row(i).data())];
        ++s.first;
        s.second += static_cast<std::size_t>(b.y[static_cast<std::size_t>(i)]);
    }
    for (const auto& [leaf, s] : seen) {
        EXPECT_EQ(leaf->samples, s.first);
        EXPECT_DOUBLE_EQ(leaf->positive_fraction, static_cast<double>(s.second) / static_cast<double>(s.first));
    }
}

TEST(Tree, PureNodeIsLeaf) {
    Matrix x(20, 2);
    x.setRandom();
    const Labels y(20, 1);
    std::vector<std::size_t> rows(20);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto t = DecisionTree::grow(x, y, rows, ForestParams{}, Rng(1));
    EXPECT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.vote(x.row(0).data()), 1);
}

TEST(Forest, ScoreIsVoteFraction) {
    std::mt19937_64 gen(5);
    const auto b = blobs(gen, 150, 4, 1.0);
    const auto rf = RandomForest::fit(b.x, b.y, small(25), 7);
    for (int i = 0; i < 10; ++i) {
        std::size_t votes = 0;
        for (const auto& t : rf.trees()) votes += static_cast<std::size_t>(t.vote(b.x.row(i).data()));
        EXPECT_EQ(rf.score(b.x.row(i).data()), static_cast<double>(votes) / 25.0);
    }
}

TEST(Forest, DeterministicAcrossThreads) {
    std::mt19937_64 gen(6);
    const auto b = blobs(gen, 200, 8, 1.0);
    const auto a = RandomForest::fit(b.x, b.y, small(40), 11, Exec{1});
    const auto c = RandomForest::fit(b.x, b.y, small(40), 11, Exec{4});
    for (int i = 0; i < 200; ++i) EXPECT_EQ(a.score(b.x.row(i).data()), c.score(b.x.row(i).data()));
}

TEST(Forest, LearnsSeparableSignal) {
    std::mt19937_64 gen(7);
    const auto train = blobs(gen, 400, 6, 2.0);
    const auto test = blobs(gen, 400, 6, 2.0);
    const auto rf = RandomForest::fit(train.x, train.y, small(100), 3);
    std::vector<double> s(400);
    for (int i = 0; i < 400; ++i) s[static_cast<std::size_t>(i)] = rf.score(test.x.row(i).data());
    // Bayes AUC for this shift is Phi(2*sqrt(2)/sqrt(2)) = Phi(2) ~ 0.977
    EXPECT_GT(auc(s, test.y), 0.9);
}

TEST(Forest, InvalidParams) {
    Matrix x = Matrix::Zero(4, 2);
    EXPECT_THROW(RandomForest::fit(x, Labels{0, 1, 0, 1}, small(0), 1), PreconditionError);
}
