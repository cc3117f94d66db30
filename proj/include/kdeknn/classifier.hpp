#pragma once

#include "kdeknn/dataset.hpp"
#include "kdeknn/error.hpp"
#include "kdeknn/forest.hpp"
#include "kdeknn/parallel.hpp"
#include "kdeknn/svm.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kdeknn {

enum class ClassifierKind { random_forest, svm_linear, svm_rbf };

inline std::string to_string(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::random_forest: return "rf";
        case ClassifierKind::svm_linear: return "svm-linear";
        case ClassifierKind::svm_rbf: return "svm-rbf";
    }
    return "?";
}

inline ClassifierKind parse_classifier_kind(const std::string& s) {
    if (s == "rf" || s == "random_forest") return ClassifierKind::random_forest;
    if (s == "svm-linear" || s == "svm_linear") return ClassifierKind::svm_linear;
    if (s == "svm-rbf" || s == "svm_rbf") return ClassifierKind::svm_rbf;
    throw PreconditionError("unknown model '" + s + "' (expected rf, svm-linear or svm-rbf)");
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::svm_rbf;
    ForestParams rf;
    SvmParams svm;

    static ClassifierSpec of(ClassifierKind kind) {
        ClassifierSpec s;
        s.kind = kind;
        s.svm.kernel = kind == ClassifierKind::svm_linear ? KernelKind::linear : KernelKind::rbf;
        return s;
    }
};

struct TrainedModel {
    ClassifierSpec spec;
    std::variant<RandomForest, SvmModel> fitted;
    std::optional<NormStats> norm;  // statistics the training data was normalised with
    std::size_t dim = 0;
};

inline TrainedModel train(const ClassifierSpec& spec, const Dataset& data, std::uint64_t seed, Exec exec = {}) {
    data.validate();
    if (data.count(0) == 0 || data.count(1) == 0)
        throw PreconditionError("train: training set must contain both classes");
    if (!data.features.allFinite()) throw PreconditionError("train: non-finite features");
    TrainedModel m{spec, RandomForest{}, std::nullopt, data.cols()};
    if (spec.kind == ClassifierKind::random_forest) {
        m.fitted = RandomForest::fit(data.features, data.labels, spec.rf, seed, exec);
    } else {
        SvmParams p = spec.svm;
        p.kernel = spec.kind == ClassifierKind::svm_linear ? KernelKind::linear : KernelKind::rbf;
        m.fitted = SvmModel::fit(data.features, data.labels, p, exec);
    }
    return m;
}

inline double predict_score(const TrainedModel& m, const double* row) {
    return std::visit(
        [&](const auto& fitted) {
            if constexpr (std::is_same_v<std::decay_t<decltype(fitted)>, RandomForest>)
                return fitted.score(row);
            else
                return fitted.decision(row);
        },
        m.fitted);
}

inline double predict_score(const TrainedModel& m, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != m.dim) throw DimensionError("predict_score", m.dim, x.size());
    return predict_score(m, x.data());
}

inline std::vector<double> predict_scores(const TrainedModel& m, const Matrix& x, Exec exec = {}) {
    if (static_cast<std::size_t>(x.cols()) != m.dim) throw DimensionError("predict_scores", m.dim, x.cols());
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    parallel_for(out.size(), exec, [&](std::size_t i) { out[i] = predict_score(m, x.row(static_cast<Eigen::Index>(i)).data()); });
    return out;
}

}  // namespace kdeknn
