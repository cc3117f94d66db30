#pragma once

// The three utility protocols: real-only training, fully synthetic training,
// and real/synthetic mixtures. Every cell evaluates AUC on the held-out
// internal test split and on the external cohort.

#include "kdeknn/classifier.hpp"
#include "kdeknn/dataset.hpp"
#include "kdeknn/generators.hpp"
#include "kdeknn/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace kdeknn {

/// Raw inputs; may contain missing values and need not be normalised.
struct ExperimentData {
    Dataset cohort;
    Dataset external;
};

/// Default simulated benchmark: the imbalanced internal cohort and a shifted,
/// balanced external cohort drawn from an independent stream.
inline ExperimentData benchmark_data(std::uint64_t seed) {
    return {simulate_cohort(CohortSpec::internal_default(), seed),
            simulate_cohort(CohortSpec::external_default(), Rng(seed).child(0xE7).next_u64())};
}

/// One train/test split with median imputation and z-scoring fitted on the
/// training part only, then applied to test and external rows.
struct Partition {
    Dataset train;
    Dataset test;
    Dataset external;
    Vector medians;
    NormStats norm;
};

inline Partition prepare_partition(const ExperimentData& data, double train_fraction, std::uint64_t seed) {
    if (data.cohort.cols() != data.external.cols())
        throw DimensionError("external cohort", data.cohort.cols(), data.external.cols());
    auto [train_raw, test_raw] = split(data.cohort, train_fraction, seed);
    Partition p;
    p.medians = feature_medians(train_raw);
    const Dataset train_imp = impute_with(train_raw, p.medians);
    p.norm = zscore_fit(train_imp);
    p.train = zscore_apply(train_imp, p.norm);
    p.test = zscore_apply(impute_with(test_raw, p.medians), p.norm);
    p.external = zscore_apply(impute_with(data.external, p.medians), p.norm);
    return p;
}

struct ExperimentConfig {
    std::vector<std::uint64_t> seeds{42, 43, 44};
    double train_fraction = 0.85;
    std::vector<ClassifierSpec> specs{ClassifierSpec::of(ClassifierKind::random_forest),
                                      ClassifierSpec::of(ClassifierKind::svm_linear),
                                      ClassifierSpec::of(ClassifierKind::svm_rbf)};
    std::vector<Method> methods{Method::smote, Method::kde, Method::kde_knn};
    std::vector<double> real_fractions{1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
    ClassifierSpec mixing_spec = ClassifierSpec::of(ClassifierKind::svm_rbf);
    GenConfig gen;  // seed is overridden per batch
    Exec exec;
    bool keep_roc = false;

    void validate() const {
        if (seeds.empty()) throw PreconditionError("experiment: seeds must be non-empty");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw PreconditionError("experiment: train fraction must lie in (0, 1)");
        for (double f : real_fractions)
            if (!(f >= 0.0 && f <= 1.0)) throw PreconditionError("experiment: real fractions must lie in [0, 1]");
        gen.validate();
    }
};

struct AucSummary {
    std::vector<double> values;
    double mean = 0.0;
    double variance = 0.0;  // population variance over repeats
};

inline AucSummary summarize(std::vector<double> values) {
    AucSummary s;
    s.values = std::move(values);
    if (s.values.empty()) return s;
    for (double v : s.values) s.mean += v;
    s.mean /= static_cast<double>(s.values.size());
    for (double v : s.values) s.variance += (v - s.mean) * (v - s.mean);
    s.variance /= static_cast<double>(s.values.size());
    return s;
}

struct ReportRow {
    std::string method;  // "real" for experiment 1
    ClassifierKind model = ClassifierKind::svm_rbf;
    std::optional<double> real_fraction;  // experiment 3 only
    AucSummary test;
    AucSummary external;
    std::vector<std::vector<RocPoint>> test_roc;  // one per repeat, when requested
    std::vector<std::vector<RocPoint>> external_roc;
};

struct ExperimentReport {
    int id = 1;
    std::vector<std::uint64_t> seeds;
    double train_fraction = 0.85;
    std::size_t repeats = 0;
    std::vector<ReportRow> rows;
};

namespace detail {

struct Scored {
    double test_auc;
    double external_auc;
    std::vector<RocPoint> test_roc;
    std::vector<RocPoint> external_roc;
};

inline Scored evaluate(const ClassifierSpec& spec, const Dataset& train_set, const Partition& p, std::uint64_t seed,
                       const ExperimentConfig& cfg) {
    TrainedModel model = kdeknn::train(spec, train_set, seed, cfg.exec);
    model.norm = p.norm;
    const auto st = predict_scores(model, p.test.features, cfg.exec);
    const auto se = predict_scores(model, p.external.features, cfg.exec);
    Scored out{auc(st, p.test.labels), auc(se, p.external.labels), {}, {}};
    if (cfg.keep_roc) {
        out.test_roc = roc_curve(st, p.test.labels);
        out.external_roc = roc_curve(se, p.external.labels);
    }
    return out;
}

inline void record(ReportRow& row, std::vector<double>& t, std::vector<double>& e, Scored s, bool keep_roc) {
    t.push_back(s.test_auc);
    e.push_back(s.external_auc);
    if (keep_roc) {
        row.test_roc.push_back(std::move(s.test_roc));
        row.external_roc.push_back(std::move(s.external_roc));
    }
}

inline constexpr std::uint64_t kMixStream = 0x313C5;

}  // namespace detail

/// Real data only; each seed draws its own partition and model seed.
inline ExperimentReport run_experiment1(const ExperimentData& data, const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport rep{1, cfg.seeds, cfg.train_fraction, cfg.seeds.size(), {}};
    std::vector<Partition> parts;
    for (auto seed : cfg.seeds) parts.push_back(prepare_partition(data, cfg.train_fraction, seed));
    for (const auto& spec : cfg.specs) {
        ReportRow row{"real", spec.kind, std::nullopt, {}, {}, {}, {}};
        std::vector<double> t, e;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
            detail::record(row, t, e, detail::evaluate(spec, parts[s].train, parts[s], cfg.seeds[s], cfg), cfg.keep_roc);
        row.test = summarize(std::move(t));
        row.external = summarize(std::move(e));
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

/// Fully synthetic training sets. One partition (from the first seed) is
/// shared; each seed generates one batch per method.
inline ExperimentReport run_experiment2(const ExperimentData& data, const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport rep{2, cfg.seeds, cfg.train_fraction, cfg.seeds.size(), {}};
    const Partition p = prepare_partition(data, cfg.train_fraction, cfg.seeds.front());
    for (Method method : cfg.methods) {
        std::vector<SyntheticBatch> batches;
        for (auto seed : cfg.seeds) {
            GenConfig g = cfg.gen;
            g.seed = seed;
            g.exec = cfg.exec;
            batches.push_back(generate(method, p.train, g));
        }
        for (const auto& spec : cfg.specs) {
            ReportRow row{to_string(method), spec.kind, std::nullopt, {}, {}, {}, {}};
            std::vector<double> t, e;
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
                detail::record(row, t, e, detail::evaluate(spec, batches[s].data, p, cfg.seeds[s], cfg), cfg.keep_roc);
            row.test = summarize(std::move(t));
            row.external = summarize(std::move(e));
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

/// Picks `count` rows of `pool` without replacement; returned indices are sorted
/// so that selecting the whole pool is order-independent of the seed.
inline std::vector<std::size_t> sample_without_replacement(std::size_t pool, std::size_t count, Rng rng) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Training set of the real partition's size mixing `real_fraction` real rows
/// (stratified by class) with KDE-KNN rows drawn from `synthetic`.
inline Dataset mix_training_set(const Dataset& real, const Dataset& synthetic, double real_fraction,
                                std::uint64_t mix_seed) {
    const std::size_t total = real.rows();
    if (synthetic.rows() < total)
        throw PreconditionError("mixing: synthetic pool smaller than the real training set");
    const Rng root = Rng(mix_seed).child(detail::kMixStream);
    std::vector<std::size_t> real_idx;
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < real.rows(); ++i)
            if (real.labels[i] == cls) members.push_back(i);
        const auto take = static_cast<std::size_t>(std::llround(real_fraction * static_cast<double>(members.size())));
        for (auto j : sample_without_replacement(members.size(), take, root.child(static_cast<std::uint64_t>(cls))))
            real_idx.push_back(members[j]);
    }
    std::sort(real_idx.begin(), real_idx.end());
    const std::size_t n_syn = total - real_idx.size();
    const auto syn_idx = sample_without_replacement(synthetic.rows(), n_syn, root.child(2));
    if (real_idx.empty()) return take_rows(synthetic, syn_idx);
    if (syn_idx.empty()) return take_rows(real, real_idx);
    return concat(take_rows(real, real_idx), take_rows(synthetic, syn_idx));
}

/// Real/synthetic mixtures. The partition, the KDE-KNN batch (sized to the
/// real training set) and the model seed come from the first seed; the seeds
/// vary only which rows are mixed in.
inline ExperimentReport run_experiment3(const ExperimentData& data, const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport rep{3, cfg.seeds, cfg.train_fraction, cfg.seeds.size(), {}};
    const Partition p = prepare_partition(data, cfg.train_fraction, cfg.seeds.front());
    GenConfig g = cfg.gen;
    const std::size_t n = p.train.rows();
    g.per_class_counts = {n / 2, n - n / 2};
    g.seed = cfg.seeds.front();
    g.exec = cfg.exec;
    const SyntheticBatch batch = kde_knn_generate(p.train, g);
    for (double frac : cfg.real_fractions) {
        ReportRow row{to_string(Method::kde_knn), cfg.mixing_spec.kind, frac, {}, {}, {}, {}};
        std::vector<double> t, e;
        for (auto mix_seed : cfg.seeds) {
            const Dataset mixed = mix_training_set(p.train, batch.data, frac, mix_seed);
            detail::record(row, t, e, detail::evaluate(cfg.mixing_spec, mixed, p, cfg.seeds.front(), cfg), cfg.keep_roc);
        }
        row.test = summarize(std::move(t));
        row.external = summarize(std::move(e));
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline ExperimentReport run_experiment(int which, const ExperimentData& data, const ExperimentConfig& cfg) {
    switch (which) {
        case 1: return run_experiment1(data, cfg);
        case 2: return run_experiment2(data, cfg);
        case 3: return run_experiment3(data, cfg);
        default: throw PreconditionError("experiment must be 1, 2 or 3");
    }
}

inline nlohmann::json to_json(const AucSummary& s) {
    return {{"values", s.values}, {"mean", s.mean}, {"variance", s.variance}};
}

inline nlohmann::json to_json(const ExperimentReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json j{{"method", row.method},
                         {"model", to_string(row.model)},
                         {"test_auc", to_json(row.test)},
                         {"external_auc", to_json(row.external)}};
        if (row.real_fraction) j["real_fraction"] = *row.real_fraction;
        rows.push_back(std::move(j));
    }
    return {{"experiment", r.id},
            {"seeds", r.seeds},
            {"train_fraction", r.train_fraction},
            {"repeats", r.repeats},
            {"rows", std::move(rows)}};
}

inline void write_table(const ExperimentReport& r, std::ostream& out) {
    auto cell = [](const AucSummary& s) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f \xC2\xB1 %.4f", s.mean, s.variance);
        return std::string(buf);
    };
    const bool mixing = r.id == 3;
    out << "Experiment " << r.id << " (AUC mean \xC2\xB1 variance over " << r.repeats << " repeats)\n";
    out << std::left;
    if (mixing) out << std::setw(7) << "real%" << std::setw(12) << "synthetic%";
    out << std::setw(10) << "method" << std::setw(12) << "model" << std::setw(19) << "test" << "external\n";
    for (const auto& row : r.rows) {
        if (mixing) {
            const auto pct = std::llround(100.0 * row.real_fraction.value_or(1.0));
            out << std::setw(7) << pct << std::setw(12) << 100 - pct;
        }
        // the plus-minus sign is two bytes but one column wide
        out << std::setw(10) << row.method << std::setw(12) << to_string(row.model) << std::setw(20)
            << cell(row.test) << cell(row.external) << "\n";
    }
}

inline std::string table_string(const ExperimentReport& r) {
    std::ostringstream s;
    write_table(r, s);
    return s.str();
}

inline void write_roc_csv(const std::vector<RocPoint>& roc, std::ostream& out) {
    out << "fpr,tpr\n";
    for (const auto& p : roc) out << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
}

}  // namespace kdeknn
