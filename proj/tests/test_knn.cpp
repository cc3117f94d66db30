#include "kdeknn/knn.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace kdeknn;

TEST(KnnFit, MinimalModel) {
    Matrix pts(2, 1);
    pts << 0, 1;
    const KnnModel m(pts, {0, 1}, 1);
    EXPECT_EQ(m.size(), 2u);
}

TEST(KnnFit, InvalidK) {
    Matrix pts(2, 1);
    pts << 0, 1;
    EXPECT_THROW(KnnModel(pts, {0, 1}, 0), PreconditionError);
    EXPECT_THROW(KnnModel(pts, {0, 1}, 3), PreconditionError);
    EXPECT_THROW(KnnModel(Matrix(0, 1), {}, 1), InsufficientDataError);
}

TEST(Kneighbors, SelfDistanceZero) {
    std::mt19937_64 gen(1);
    const Matrix pts = oracle::random_matrix(gen, 20, 3);
    const KnnModel m(pts, Labels(20, 0), 3);
    const auto nn = m.kneighbors(pts.row(7).transpose(), 1);
    EXPECT_EQ(nn[0].index, 7u);
    EXPECT_EQ(nn[0].distance, 0.0);
}

TEST(Kneighbors, NearerPoint) {
    Matrix pts(2, 1);
    pts << 0, 10;
    const KnnModel m(pts, {0, 1}, 1);
    const auto nn = m.kneighbors(Vector::Constant(1, 1.0), 1);
    EXPECT_EQ(nn[0].index, 0u);
    EXPECT_DOUBLE_EQ(nn[0].distance, 1.0);
}

TEST(Kneighbors, TiesGoToLowerIndex) {
    Matrix pts(4, 1);
    pts << 2, -1, 1, -2;
    const KnnModel m(pts, {0, 0, 1, 1}, 1);
    const auto nn = m.kneighbors(Vector::Zero(1), 4);
    EXPECT_EQ(nn[0].index, 1u);
    EXPECT_EQ(nn[1].index, 2u);
    EXPECT_EQ(nn[2].index, 0u);
    EXPECT_EQ(nn[3].index, 3u);
}

TEST(Kneighbors, DuplicatePointsOrderedByIndex) {
    Matrix pts = Matrix::Zero(50, 2);
    const KnnModel m(pts, Labels(50, 0), 1);
    const auto nn = m.kneighbors(Vector::Zero(2), 10);
    for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(nn[r].index, r);
}

TEST(Kneighbors, MatchesScan) {
    std::mt19937_64 gen(2);
    const Matrix pts = oracle::random_matrix(gen, 30, 4);
    const Matrix q = oracle::random_matrix(gen, 10, 4);
    const KnnModel m(pts, Labels(30, 0), 7);
    for (int i = 0; i < q.rows(); ++i) {
        const auto got = m.kneighbors(q.row(i).transpose(), 7);
        const auto want = oracle::knn_scan(pts, q, i, 7);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t r = 0; r < got.size(); ++r) {
            EXPECT_EQ(got[r].index, want[r].first);
            EXPECT_EQ(got[r].distance, want[r].second);
        }
    }
}

// Quantised coordinates force many exact distance ties.
TEST(Kneighbors, MatchesScanWithHeavyTies) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> coord(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix pts(120, 3), q(15, 3);
        for (int i = 0; i < pts.size(); ++i) pts.data()[i] = coord(gen);
        for (int i = 0; i < q.size(); ++i) q.data()[i] = coord(gen);
        const KnnModel m(pts, Labels(120, 0), 1);
        for (int i = 0; i < q.rows(); ++i) {
            const auto got = m.kneighbors(q.row(i).transpose(), 9);
            const auto want = oracle::knn_scan(pts, q, i, 9);
            for (std::size_t r = 0; r < got.size(); ++r) {
                ASSERT_EQ(got[r].index, want[r].first);
                ASSERT_EQ(got[r].distance, want[r].second);
            }
        }
    }
}

TEST(Kneighbors, DimensionMismatch) {
    Matrix pts = Matrix::Zero(3, 2);
    const KnnModel m(pts, {0, 1, 0}, 1);
    EXPECT_THROW(m.kneighbors(Vector::Zero(3), 1), DimensionError);
    EXPECT_THROW(m.predict(Vector::Zero(1)), DimensionError);
}

TEST(KnnPredict, UnanimousClass) {
    std::mt19937_64 gen(4);
    const Matrix pts = oracle::random_matrix(gen, 15, 2);
    const KnnModel m(pts, Labels(15, 1), 5);
    const Matrix q = oracle::random_matrix(gen, 10, 2, 5.0);
    for (int i = 0; i < q.rows(); ++i) EXPECT_EQ(m.predict(Vector(q.row(i).transpose())), 1);
}

TEST(KnnPredict, NearestLabel) {
    Matrix pts(2, 1);
    pts << -1, 1;
    const KnnModel m(pts, {0, 1}, 1);
    EXPECT_EQ(m.predict(Vector::Constant(1, 0.9)), 1);
}

TEST(KnnPredict, EvenKTieUsesNearest) {
    Matrix pts(2, 1);
    pts << -1, 2;
    const KnnModel m(pts, {0, 1}, 2);
    EXPECT_EQ(m.predict(Vector::Constant(1, 0.0)), 0);
    EXPECT_EQ(m.predict(Vector::Constant(1, 1.0)), 1);
}

TEST(KnnPredict, MatchesMajorityOracle) {
    std::mt19937_64 gen(5);
    const Matrix pts = oracle::random_matrix(gen, 50, 3);
    Labels y(50);
    std::bernoulli_distribution coin(0.4);
    for (auto& v : y) v = coin(gen) ? 1 : 0;
    const KnnModel m(pts, y, 5);
    const Matrix q = oracle::random_matrix(gen, 20, 3);
    for (int i = 0; i < q.rows(); ++i) EXPECT_EQ(m.predict(q.row(i).data()), oracle::knn_vote(pts, y, q, i, 5));
}

TEST(KnnPredict, PermutationInvariantWithDistinctDistances) {
    std::mt19937_64 gen(6);
    const Matrix pts = oracle::random_matrix(gen, 40, 3);
    Labels y(40);
    for (int i = 0; i < 40; ++i) y[i] = i % 3 == 0;
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    Matrix pp(40, 3);
    Labels yp(40);
    for (int i = 0; i < 40; ++i) {
        pp.row(i) = pts.row(perm[i]);
        yp[i] = y[perm[i]];
    }
    const KnnModel a(pts, y, 5), b(pp, yp, 5);
    const Matrix q = oracle::random_matrix(gen, 30, 3);
    for (int i = 0; i < q.rows(); ++i) EXPECT_EQ(a.predict(q.row(i).data()), b.predict(q.row(i).data()));
}

TEST(KdTree, LeaveOneOutExcludesSelfOnly) {
    Matrix pts(3, 1);
    pts << 0, 0, 5;
    const KdTree t(pts);
    const double x = 0.0;
    const auto nn = t.query(&x, 1, 0);
    EXPECT_EQ(nn[0].index, 1u);
    EXPECT_EQ(nn[0].distance, 0.0);
}
