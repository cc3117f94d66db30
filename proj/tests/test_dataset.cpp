#include "kdeknn/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace kdeknn;

namespace {

Dataset parse(const std::string& text, const std::string& label = "y") {
    std::istringstream in(text);
    return parse_csv(in, label);
}

Dataset column(std::vector<double> values) {
    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) ds.features(static_cast<Eigen::Index>(i), 0) = values[i];
    ds.labels.assign(values.size(), 0);
    ds.feature_names = {"a"};
    return ds;
}

}  // namespace

TEST(LoadCsv, ThreeRowsTwoFeatures) {
    const auto ds = parse("a,b,y\n1,2,0\n3,4,1\n5,6,0\n");
    ASSERT_EQ(ds.rows(), 3u);
    ASSERT_EQ(ds.cols(), 2u);
    EXPECT_EQ(ds.labels, (Labels{0, 1, 0}));
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_DOUBLE_EQ(ds.features(2, 1), 6.0);
}

TEST(LoadCsv, EmptyAndNaCellsAreMissing) {
    const auto ds = parse("a,b,y\n1,2,0\n,4,1\n5,NA,0\n");
    EXPECT_TRUE(is_missing(ds.features(1, 0)));
    EXPECT_TRUE(is_missing(ds.features(2, 1)));
    EXPECT_FALSE(is_missing(ds.features(1, 1)));
}

TEST(LoadCsv, LabelColumnAnywhereAndStringLabelsSorted) {
    const auto ds = parse("y,a\nsepsis,1\ncontrol,2\nsepsis,3\n");
    EXPECT_EQ(ds.labels, (Labels{1, 0, 1}));
    EXPECT_EQ(ds.class_names[0], "control");
    EXPECT_EQ(ds.class_names[1], "sepsis");
}

TEST(LoadCsv, QuotedHeader) {
    const auto ds = parse("\"a,1\",b,y\n1,2,0\n3,4,1\n");
    EXPECT_EQ(ds.feature_names[0], "a,1");
}

TEST(LoadCsv, RaggedRowReportsLine) {
    try {
        parse("a,b,y\n1,2,0\n3,1\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadCsv, NonNumericFeatureIsSchemaError) {
    EXPECT_THROW(parse("a,y\n1,0\nabc,1\n"), SchemaError);
}

TEST(LoadCsv, ThreeLabelValuesIsSchemaError) {
    EXPECT_THROW(parse("a,y\n1,x\n2,y\n3,z\n"), SchemaError);
}

TEST(LoadCsv, TooFewRows) {
    EXPECT_THROW(parse("a,y\n1,0\n"), InsufficientDataError);
}

TEST(LoadCsv, MissingLabelColumn) {
    EXPECT_THROW(parse("a,b\n1,0\n2,1\n"), SchemaError);
}

TEST(LoadCsv, MissingFileIsIoError) {
    EXPECT_THROW(load_csv("/nonexistent/file.csv", "y"), IoError);
}

TEST(LoadCsv, CohortShapedFile) {
    const auto spec = CohortSpec::internal_default();
    const auto ds = simulate_cohort(spec, 1);
    const auto path = std::filesystem::temp_directory_path() / "kdeknn_cohort_shape.csv";
    write_csv(ds, path.string());
    const auto back = load_csv(path.string(), "label");
    std::filesystem::remove(path);
    EXPECT_EQ(back.rows(), 1275u);
    EXPECT_EQ(back.cols(), 27u);
    EXPECT_EQ(back.count(0), 979u);
    EXPECT_EQ(back.count(1), 296u);
}

TEST(CsvRoundTrip, ReproducesValues) {
    const auto ds = simulate_cohort(CohortSpec::internal_default(), 5);
    std::stringstream buf;
    write_csv(ds, buf);
    const auto back = parse_csv(buf, "label");
    ASSERT_EQ(back.rows(), ds.rows());
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            const double a = ds.features(i, j), b = back.features(i, j);
            ASSERT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a)));
        }
    EXPECT_EQ(back.labels, ds.labels);
}

TEST(ImputeMedian, MiddleMissing) {
    const auto out = impute_median(column({1, kMissing, 3}));
    EXPECT_DOUBLE_EQ(out.features(1, 0), 2.0);
    EXPECT_FALSE(out.has_missing());
}

TEST(ImputeMedian, NoMissingIsIdentity) {
    const auto in = column({4, 1, 3});
    const auto out = impute_median(in);
    EXPECT_EQ(out.features, in.features);
}

TEST(ImputeMedian, OddCountMedian) {
    // median of {5, 9, 1} = 5
    const auto out = impute_median(column({5, kMissing, kMissing, 9, 1}));
    EXPECT_DOUBLE_EQ(out.features(1, 0), 5.0);
    EXPECT_DOUBLE_EQ(out.features(2, 0), 5.0);
}

TEST(ImputeMedian, AllMissingNamesFeature) {
    try {
        impute_median(column({kMissing, kMissing}));
        FAIL();
    } catch (const ImputationError& e) {
        EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
    }
}

TEST(ZScore, ConstantFeatureIsDegenerate) {
    const auto s = zscore_fit(column({0, 0, 0}));
    EXPECT_DOUBLE_EQ(s.means[0], 0.0);
    EXPECT_TRUE(s.degenerate[0]);
    const auto z = zscore_apply(column({0, 0, 0}), s);
    EXPECT_EQ(z.features.col(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ZScore, SymmetricPair) {
    const auto s = zscore_fit(column({-1, 1}));
    EXPECT_DOUBLE_EQ(s.means[0], 0.0);
    EXPECT_DOUBLE_EQ(s.stds[0], 1.0);
}

TEST(ZScore, PopulationStd) {
    // population std of {2,4,6,8}: sqrt((9+1+1+9)/4) = sqrt(5)
    const auto s = zscore_fit(column({2, 4, 6, 8}));
    EXPECT_DOUBLE_EQ(s.means[0], 5.0);
    EXPECT_NEAR(s.stds[0], 2.2360679774997896, 1e-15);
}

TEST(ZScore, SingleValue) {
    NormStats s;
    s.means = Vector::Constant(1, 5.0);
    s.stds = Vector::Constant(1, 2.0);
    s.degenerate = {false};
    EXPECT_DOUBLE_EQ(zscore_apply(column({7}), s).features(0, 0), 1.0);
}

TEST(ZScore, SelfNormalisationProperty) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto spec = CohortSpec::internal_default();
        spec.covariance_scale = 3.7;
        const auto ds = simulate_cohort(spec, seed);
        const auto z = zscore_apply(ds, zscore_fit(ds));
        EXPECT_TRUE(z.normalized);
        for (Eigen::Index j = 0; j < z.features.cols(); ++j) {
            const double mean = z.features.col(j).mean();
            const double sd = std::sqrt((z.features.col(j).array() - mean).square().mean());
            EXPECT_LT(std::abs(mean), 1e-9);
            EXPECT_LT(std::abs(sd - 1.0), 1e-9);
        }
    }
}

TEST(ZScore, ExternalCohortMatchesRecomputation) {
    const auto train = simulate_cohort(CohortSpec::internal_default(), 1);
    const auto ext = simulate_cohort(CohortSpec::external_default(), 2);
    const auto stats = zscore_fit(train);
    const auto z = zscore_apply(ext, stats);
    for (Eigen::Index j = 0; j < 27; ++j) {
        double mean = 0, sq = 0;
        for (Eigen::Index i = 0; i < train.features.rows(); ++i) mean += train.features(i, j);
        mean /= static_cast<double>(train.features.rows());
        for (Eigen::Index i = 0; i < train.features.rows(); ++i) sq += std::pow(train.features(i, j) - mean, 2);
        const double sd = std::sqrt(sq / static_cast<double>(train.features.rows()));
        for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(z.features(i, j), (ext.features(i, j) - mean) / sd, 1e-12);
    }
    // drifted features keep a visible offset
    EXPECT_GT(z.features.col(0).mean(), 0.1);
}

TEST(ZScore, DimensionMismatch) {
    const auto s = zscore_fit(column({1, 2}));
    auto two = simulate_cohort(CohortSpec::internal_default(), 1);
    EXPECT_THROW(zscore_apply(two, s), DimensionError);
}

TEST(ZScore, InvertRoundTrip) {
    const auto ds = simulate_cohort(CohortSpec::internal_default(), 9);
    const auto s = zscore_fit(ds);
    const auto back = zscore_invert(zscore_apply(ds, s), s);
    EXPECT_LT((back.features - ds.features).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ZScore, JsonRoundTrip) {
    const auto s = zscore_fit(column({1, 2, 4}));
    const auto back = norm_stats_from_json(to_json(s));
    EXPECT_EQ(back.means, s.means);
    EXPECT_EQ(back.stds, s.stds);
    EXPECT_EQ(back.degenerate, s.degenerate);
}

TEST(Split, FloorPerClass) {
    Dataset ds = column(std::vector<double>(100, 1.0));
    for (std::size_t i = 50; i < 100; ++i) ds.labels[i] = 1;
    const auto [train, test] = split(ds, 0.85, 3);
    EXPECT_EQ(train.rows(), 84u);
    EXPECT_EQ(train.count(0), 42u);
    EXPECT_EQ(train.count(1), 42u);
    EXPECT_EQ(test.rows(), 16u);
}

TEST(Split, DeterministicForSeed) {
    const auto ds = simulate_cohort(CohortSpec::internal_default(), 1);
    const auto a = split_indices(ds.labels, 0.85, 17);
    const auto b = split_indices(ds.labels, 0.85, 17);
    const auto c = split_indices(ds.labels, 0.85, 18);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(a.train, c.train);
}

TEST(Split, CohortShapedCounts) {
    // floor(979 * 0.85) + floor(296 * 0.85) = 832 + 251
    const auto ds = simulate_cohort(CohortSpec::internal_default(), 1);
    const auto [train, test] = split(ds, 0.85, 42);
    EXPECT_EQ(train.count(0), 832u);
    EXPECT_EQ(train.count(1), 251u);
    EXPECT_EQ(train.rows(), 1083u);
    EXPECT_EQ(test.rows(), 192u);
}

TEST(Split, IsPartition) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = simulate_cohort(CohortSpec::internal_default(), seed);
        const auto idx = split_indices(ds.labels, 0.7, seed);
        std::vector<std::size_t> all = idx.train;
        all.insert(all.end(), idx.test.begin(), idx.test.end());
        std::sort(all.begin(), all.end());
        ASSERT_EQ(all.size(), ds.rows());
        for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
    }
}

TEST(Split, SmallClassIsStratificationError) {
    Dataset ds = column({1, 2, 3, 4});
    ds.labels = {0, 0, 0, 1};
    EXPECT_THROW(split(ds, 0.85, 1), StratificationError);
}

TEST(Split, FractionOutOfRange) {
    Dataset ds = column({1, 2, 3, 4});
    ds.labels = {0, 0, 1, 1};
    EXPECT_THROW(split(ds, 1.0, 1), PreconditionError);
}

TEST(Simulate, SeparatedClassMeans) {
    CohortSpec spec;
    spec.n_per_class = {10, 10};
    spec.n_features = 2;
    spec.class_mean_shift = Vector::Constant(2, 3.0);
    const auto ds = simulate_cohort(spec, 4);
    ASSERT_EQ(ds.rows(), 20u);
    const Matrix a = ds.class_rows(0), b = ds.class_rows(1);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double ma = a.col(j).mean(), mb = b.col(j).mean();
        const double va = (a.col(j).array() - ma).square().sum() / 9.0;
        const double vb = (b.col(j).array() - mb).square().sum() / 9.0;
        const double t = (mb - ma) / std::sqrt(va / 10.0 + vb / 10.0);
        EXPECT_GT(t, 5.0) << "feature " << j;
    }
}

TEST(Simulate, DefaultShape) {
    const auto ds = simulate_cohort(CohortSpec::internal_default(), 42);
    EXPECT_EQ(ds.count(0), 979u);
    EXPECT_EQ(ds.count(1), 296u);
    EXPECT_EQ(ds.cols(), 27u);
    EXPECT_TRUE(ds.features.allFinite());
    const auto ext = simulate_cohort(CohortSpec::external_default(), 42);
    EXPECT_EQ(ext.count(0), 1014u);
    EXPECT_EQ(ext.count(1), 1014u);
}

TEST(Simulate, ZeroDriftIsIdentity) {
    auto spec = CohortSpec::internal_default();
    const auto plain = simulate_cohort(spec, 8);
    spec.external_drift = Vector::Zero(27);
    const auto drifted = simulate_cohort(spec, 8);
    EXPECT_EQ(plain.features, drifted.features);
    EXPECT_EQ(plain.labels, drifted.labels);
}

TEST(Simulate, BitIdenticalAcrossRuns) {
    const auto a = simulate_cohort(CohortSpec::internal_default(), 99);
    const auto b = simulate_cohort(CohortSpec::internal_default(), 99);
    EXPECT_EQ(0, std::memcmp(a.features.data(), b.features.data(), sizeof(double) * a.features.size()));
}

TEST(Simulate, InvalidSpec) {
    auto spec = CohortSpec::internal_default();
    spec.covariance_scale = 0.0;
    EXPECT_THROW(simulate_cohort(spec, 1), PreconditionError);
    spec = CohortSpec::internal_default();
    spec.n_per_class[1] = 0;
    EXPECT_THROW(simulate_cohort(spec, 1), PreconditionError);
}
