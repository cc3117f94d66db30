#include "kdeknn/metrics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace kdeknn;

TEST(Auc, PerfectRanking) { EXPECT_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, Labels{0, 0, 1, 1}), 1.0); }

TEST(Auc, AllTies) { EXPECT_EQ(auc(std::vector<double>{3, 3, 3, 3, 3}, Labels{0, 1, 0, 1, 1}), 0.5); }

TEST(Auc, SingleClassIsError) {
    EXPECT_THROW(auc(std::vector<double>{1, 2}, Labels{1, 1}), PreconditionError);
    EXPECT_THROW(auc(std::vector<double>{1, 2}, Labels{1}), DimensionError);
}

TEST(Auc, MatchesPairwiseOracle) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin(0.3);
    std::vector<double> s(200);
    Labels y(200);
    for (int i = 0; i < 200; ++i) {
        y[i] = coin(gen);
        s[i] = nd(gen) + 0.8 * y[i];
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(auc(s, y), oracle::auc_pairwise(s, y), 1e-12);
}

TEST(Auc, MonotoneTransformInvariance) {
    std::mt19937_64 gen(2);
    std::uniform_int_distribution<int> q(0, 20);
    std::vector<double> s(150), t(150);
    Labels y(150);
    for (int i = 0; i < 150; ++i) {
        y[i] = i % 3 == 0;
        s[i] = q(gen) / 4.0;
        t[i] = std::exp(3.0 * s[i]) - 7.0;
    }
    EXPECT_EQ(auc(s, y), auc(t, y));
}

TEST(Auc, LabelFlipAntisymmetry) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    std::vector<double> s(120);
    Labels y(120), flipped(120);
    for (int i = 0; i < 120; ++i) {
        s[i] = nd(gen);
        y[i] = i % 4 == 0;
        flipped[i] = 1 - y[i];
    }
    EXPECT_NEAR(auc(s, flipped), 1.0 - auc(s, y), 1e-15);
}

TEST(Roc, EndpointsAndTrapezoidArea) {
    std::mt19937_64 gen(4);
    std::uniform_int_distribution<int> q(0, 10);
    std::vector<double> s(90);
    Labels y(90);
    for (int i = 0; i < 90; ++i) {
        y[i] = i % 2;
        s[i] = q(gen) + y[i] * 2;
    }
    const auto roc = roc_curve(s, y);
    EXPECT_EQ(roc.front().fpr, 0.0);
    EXPECT_EQ(roc.back().tpr, 1.0);
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i)
        area += (roc[i].fpr - roc[i - 1].fpr) * 0.5 * (roc[i].tpr + roc[i - 1].tpr);
    EXPECT_NEAR(area, auc(s, y), 1e-12);
}
