#pragma once

// Fully synthetic, class-balanced dataset generators:
//   * SMOTE interpolation applied independently to both classes;
//   * KDE-KNN: per-class Gaussian KDE draws filtered by a KNN validator
//     trained on the whole training set, repeated until each class target
//     is met (plain KDE is the same loop with the validator switched off).

#include "kdeknn/dataset.hpp"
#include "kdeknn/error.hpp"
#include "kdeknn/kde.hpp"
#include "kdeknn/kdtree.hpp"
#include "kdeknn/knn.hpp"
#include "kdeknn/parallel.hpp"
#include "kdeknn/rng.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace kdeknn {

enum class Method { smote, kde, kde_knn };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::smote: return "smote";
        case Method::kde: return "kde";
        case Method::kde_knn: return "kde-knn";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "smote") return Method::smote;
    if (s == "kde") return Method::kde;
    if (s == "kde-knn" || s == "kde_knn") return Method::kde_knn;
    throw PreconditionError("unknown method '" + s + "' (expected smote, kde or kde-knn)");
}

struct GenConfig {
    std::array<std::size_t, 2> per_class_counts{540, 540};
    std::size_t knn_k = kDefaultValidatorK;
    BandwidthRule rule = BandwidthRule::scott;
    double regularization = kDefaultRegularization;
    std::size_t smote_k = 5;
    std::size_t max_attempts = 0;  // 0: 1000 x total target
    std::size_t batch_multiplier = 4;
    std::uint64_t seed = 42;
    Exec exec;

    std::size_t total() const noexcept { return per_class_counts[0] + per_class_counts[1]; }
    std::size_t attempt_cap() const noexcept { return max_attempts == 0 ? 1000 * total() : max_attempts; }

    void validate() const {
        if (per_class_counts[0] == 0 || per_class_counts[1] == 0)
            throw PreconditionError("GenConfig: per-class counts must be > 0");
        if (knn_k == 0 || smote_k == 0) throw PreconditionError("GenConfig: k must be >= 1");
        if (attempt_cap() < total()) throw PreconditionError("GenConfig: max_attempts below total requested count");
        if (batch_multiplier == 0) throw PreconditionError("GenConfig: batch_multiplier must be >= 1");
    }
};

struct SyntheticBatch {
    Dataset data;  // normalised space
    Method method = Method::kde_knn;
    std::array<std::size_t, 2> accepted{0, 0};
    std::array<std::size_t, 2> attempted{0, 0};
    std::array<double, 2> acceptance_rate{0.0, 0.0};
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// SMOTE

/// One interpolation step, p + lambda (q - p).
inline RowVector smote_interpolate(const RowVector& p, const RowVector& q, double lambda) {
    return p + lambda * (q - p);
}

struct SmoteTraceEntry {
    std::size_t p;
    std::size_t q;
    double lambda;
};

/// count rows interpolated between class points and one of their k nearest
/// same-class neighbours (the point itself excluded). Row r draws from
/// rng.child(r). If `trace` is non-null it receives (p, q, lambda) per row.
inline Matrix smote_generate(const Matrix& class_points, std::size_t k, std::size_t count, const Rng& rng,
                             Exec exec = {}, std::vector<SmoteTraceEntry>* trace = nullptr) {
    const auto m = static_cast<std::size_t>(class_points.rows());
    if (k == 0) throw PreconditionError("SMOTE: k must be >= 1");
    if (m <= k)
        throw InsufficientDataError("SMOTE: class has " + std::to_string(m) + " points; need more than k = " +
                                    std::to_string(k));
    if (count == 0) throw PreconditionError("SMOTE: count must be >= 1");

    const KdTree tree(class_points);
    std::vector<std::vector<std::size_t>> neighbours(m);
    parallel_for(m, exec, [&](std::size_t i) {
        for (const auto& nb : tree.query(class_points.row(static_cast<Eigen::Index>(i)).data(), k, i))
            neighbours[i].push_back(nb.index);
    });

    Matrix out(static_cast<Eigen::Index>(count), class_points.cols());
    std::vector<SmoteTraceEntry> entries(trace ? count : 0);
    parallel_for(count, exec, [&](std::size_t r) {
        Rng row_rng = rng.child(r);
        const auto p = static_cast<std::size_t>(row_rng.uniform_index(m));
        const auto q = neighbours[p][row_rng.uniform_index(k)];
        const double lambda = row_rng.uniform();
        out.row(static_cast<Eigen::Index>(r)) = smote_interpolate(class_points.row(static_cast<Eigen::Index>(p)),
                                                                  class_points.row(static_cast<Eigen::Index>(q)), lambda);
        if (trace) entries[r] = {p, q, lambda};
    });
    if (trace) *trace = std::move(entries);
    return out;
}

namespace detail {

inline constexpr std::uint64_t kSmoteStream = 0x5307E;
inline constexpr std::uint64_t kKdeStream = 0x4BDE;

inline Dataset assemble_batch(const Dataset& schema, const std::array<Matrix, 2>& parts) {
    Matrix f(parts[0].rows() + parts[1].rows(), schema.features.cols());
    f << parts[0], parts[1];
    Labels y(static_cast<std::size_t>(f.rows()), 0);
    std::fill(y.begin() + parts[0].rows(), y.end(), 1);
    return schema.with_rows(std::move(f), std::move(y));
}

inline void require_classes(const Dataset& train, std::size_t min_members, const char* who) {
    for (int cls = 0; cls < 2; ++cls)
        if (train.count(cls) < min_members)
            throw InsufficientDataError(std::string(who) + ": class " + std::to_string(cls) + " has " +
                                        std::to_string(train.count(cls)) + " member(s); need at least " +
                                        std::to_string(min_members));
}

}  // namespace detail

inline SyntheticBatch smote_full_synthetic(const Dataset& train, const GenConfig& config) {
    config.validate();
    train.validate();
    detail::require_classes(train, config.smote_k + 1, "SMOTE");
    const Rng root = Rng(config.seed).child(detail::kSmoteStream);
    std::array<Matrix, 2> parts;
    for (int cls = 0; cls < 2; ++cls)
        parts[static_cast<std::size_t>(cls)] =
            smote_generate(train.class_rows(cls), config.smote_k, config.per_class_counts[static_cast<std::size_t>(cls)],
                           root.child(static_cast<std::uint64_t>(cls)), config.exec);
    SyntheticBatch batch;
    batch.data = detail::assemble_batch(train, parts);
    batch.data.provenance = "smote(seed=" + std::to_string(config.seed) + ")";
    batch.method = Method::smote;
    batch.accepted = batch.attempted = config.per_class_counts;
    batch.acceptance_rate = {1.0, 1.0};
    batch.seed = config.seed;
    return batch;
}

/// KDE sampling with optional KNN validation.
///
/// Candidate j of class c is the j-th row of the KDE sample sequence keyed by
/// (seed, c). Candidates are drawn in blocks of batch_multiplier x remaining
/// target and validated in parallel, then accepted strictly in sequence
/// order; `attempted` counts candidates up to the last accepted one. The
/// attempt budget is split between classes in proportion to their targets.
inline SyntheticBatch kde_sample_filtered(const Dataset& train, const GenConfig& config, bool validate) {
    config.validate();
    train.validate();
    if (!train.normalized) throw PreconditionError("KDE-KNN: training data must be z-score normalised");
    if (train.has_missing()) throw PreconditionError("KDE-KNN: training data has missing values");
    detail::require_classes(train, 2, "KDE-KNN");

    std::optional<KnnModel> validator;
    if (validate) validator.emplace(train.features, train.labels, config.knn_k);

    const Rng root = Rng(config.seed).child(detail::kKdeStream);
    SyntheticBatch batch;
    batch.method = validate ? Method::kde_knn : Method::kde;
    batch.seed = config.seed;
    std::array<Matrix, 2> parts;
    bool stalled = false;

    for (int cls = 0; cls < 2; ++cls) {
        const auto c = static_cast<std::size_t>(cls);
        const KdeModel kde = fit_kde(train.class_rows(cls), config.rule, config.regularization);
        const Rng class_rng = root.child(c);
        const std::size_t target = config.per_class_counts[c];
        const std::size_t budget = std::max(
            target, static_cast<std::size_t>(static_cast<double>(config.attempt_cap()) * static_cast<double>(target) /
                                             static_cast<double>(config.total())));
        Matrix& kept = parts[c];
        kept.resize(static_cast<Eigen::Index>(target), train.features.cols());
        std::size_t accepted = 0, drawn = 0, attempted = 0;
        while (accepted < target && drawn < budget) {
            const std::size_t block = std::min(budget - drawn, config.batch_multiplier * (target - accepted));
            const Matrix candidates = kde.sample_range(drawn, block, class_rng, config.exec);
            std::vector<int> verdict(block, cls);
            if (validator)
                parallel_for(block, config.exec, [&](std::size_t r) {
                    verdict[r] = validator->predict(candidates.row(static_cast<Eigen::Index>(r)).data());
                });
            for (std::size_t r = 0; r < block && accepted < target; ++r) {
                ++attempted;
                if (verdict[r] == cls) kept.row(static_cast<Eigen::Index>(accepted++)) = candidates.row(static_cast<Eigen::Index>(r));
            }
            drawn += block;
        }
        batch.accepted[c] = accepted;
        batch.attempted[c] = attempted;
        batch.acceptance_rate[c] = attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
        if (accepted < target) {
            stalled = true;
            kept.conservativeResize(static_cast<Eigen::Index>(accepted), Eigen::NoChange);
        }
    }
    if (stalled) {
        std::ostringstream msg;
        msg << "generation stalled: accepted " << batch.accepted[0] << "/" << config.per_class_counts[0]
            << " (class 0, acceptance " << batch.acceptance_rate[0] << ") and " << batch.accepted[1] << "/"
            << config.per_class_counts[1] << " (class 1, acceptance " << batch.acceptance_rate[1]
            << ") within the attempt budget; classes may be too entangled for the validator";
        throw GenerationStalled(msg.str(), batch.acceptance_rate[0], batch.acceptance_rate[1]);
    }
    batch.data = detail::assemble_batch(train, parts);
    batch.data.provenance = to_string(batch.method) + "(seed=" + std::to_string(config.seed) + ")";
    return batch;
}

inline SyntheticBatch kde_knn_generate(const Dataset& train, const GenConfig& config) {
    return kde_sample_filtered(train, config, true);
}

inline SyntheticBatch kde_generate(const Dataset& train, const GenConfig& config) {
    return kde_sample_filtered(train, config, false);
}

inline SyntheticBatch generate(Method method, const Dataset& train, const GenConfig& config) {
    switch (method) {
        case Method::smote: return smote_full_synthetic(train, config);
        case Method::kde: return kde_generate(train, config);
        case Method::kde_knn: return kde_knn_generate(train, config);
    }
    throw PreconditionError("unknown method");
}

inline nlohmann::json sidecar_json(const SyntheticBatch& b) {
    return {{"method", to_string(b.method)},
            {"seed", b.seed},
            {"counts", {b.accepted[0], b.accepted[1]}},
            {"attempted", {b.attempted[0], b.attempted[1]}},
            {"acceptance_rates", {b.acceptance_rate[0], b.acceptance_rate[1]}}};
}

}  // namespace kdeknn
