#pragma once

// Labelled tabular cohorts: CSV ingestion and export, median imputation,
// z-score normalisation, stratified splitting and a seeded Gaussian cohort
// simulator used as a benchmark stand-in for clinical databases.

#include "kdeknn/error.hpp"
#include "kdeknn/rng.hpp"
#include "kdeknn/types.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kdeknn {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

struct Dataset {
    Matrix features;  // missing cells hold NaN until imputed
    Labels labels;
    std::vector<std::string> feature_names;
    std::string label_name = "label";
    std::array<std::string, 2> class_names{"0", "1"};
    bool normalized = false;
    std::string provenance;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }

    std::size_t count(int cls) const noexcept {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), cls));
    }

    bool has_missing() const noexcept { return features.hasNaN(); }

    /// Shape and label checks shared by every constructor path.
    void validate() const {
        if (static_cast<std::size_t>(features.rows()) != labels.size())
            throw SchemaError("feature rows (" + std::to_string(features.rows()) +
                              ") do not match label count (" + std::to_string(labels.size()) + ")");
        if (static_cast<std::size_t>(features.cols()) != feature_names.size())
            throw SchemaError("feature columns (" + std::to_string(features.cols()) +
                              ") do not match feature name count (" + std::to_string(feature_names.size()) + ")");
        for (int y : labels)
            if (y != 0 && y != 1) throw SchemaError("labels must be binary {0,1}");
    }

    /// Rows of one class, in dataset order.
    Matrix class_rows(int cls) const {
        Matrix out(static_cast<Eigen::Index>(count(cls)), features.cols());
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) out.row(r++) = features.row(static_cast<Eigen::Index>(i));
        return out;
    }

    /// Copy with the same schema and a different body.
    Dataset with_rows(Matrix f, Labels y) const {
        Dataset out;
        out.features = std::move(f);
        out.labels = std::move(y);
        out.feature_names = feature_names;
        out.label_name = label_name;
        out.class_names = class_names;
        out.normalized = normalized;
        out.provenance = provenance;
        return out;
    }
};

inline Dataset take_rows(const Dataset& ds, std::span<const std::size_t> idx) {
    Matrix f(static_cast<Eigen::Index>(idx.size()), ds.features.cols());
    Labels y(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        f.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(idx[r]));
        y[r] = ds.labels[idx[r]];
    }
    return ds.with_rows(std::move(f), std::move(y));
}

/// Stack b under a; schemas must agree.
inline Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.cols() != b.cols()) throw DimensionError("concat", a.cols(), b.cols());
    Matrix f(a.features.rows() + b.features.rows(), a.features.cols());
    f << a.features, b.features;
    Labels y = a.labels;
    y.insert(y.end(), b.labels.begin(), b.labels.end());
    return a.with_rows(std::move(f), std::move(y));
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// RFC 4180 fields on a single physical line; "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!trim(cur).empty()) throw ParseError("stray quote inside unquoted field", line_no);
            cur.clear();
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.emplace_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    fields.emplace_back(was_quoted ? cur : std::string(trim(cur)));
    return fields;
}

inline bool is_missing_token(std::string_view s) noexcept { return s.empty() || s == "NA"; }

inline std::optional<double> parse_double(std::string_view s) noexcept {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

/// Shortest decimal text that reads back to exactly `v`.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Parses a header-first CSV. Every column except `label_column` becomes a
/// feature; empty cells and "NA" become missing markers.
inline Dataset parse_csv(std::istream& in, const std::string& label_column, const std::string& source = "<stream>") {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        header = detail::split_csv_line(line, line_no);
        break;
    }
    if (header.empty()) throw ParseError("missing header row", line_no == 0 ? 1 : line_no);
    if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
        header[0].erase(0, 3);

    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) throw SchemaError(source + ": label column '" + label_column + "' not found");
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_col) names.push_back(header[c]);

    std::vector<double> cells;
    std::vector<std::string> raw_labels;
    std::vector<std::size_t> label_lines;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line, line_no);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == label_col) {
                if (detail::is_missing_token(fields[c]))
                    throw SchemaError(source + ": line " + std::to_string(line_no) + ": missing label");
                raw_labels.push_back(fields[c]);
                label_lines.push_back(line_no);
                continue;
            }
            if (detail::is_missing_token(fields[c])) {
                cells.push_back(kMissing);
                continue;
            }
            const auto v = detail::parse_double(fields[c]);
            if (!v || !std::isfinite(*v))
                throw SchemaError(source + ": line " + std::to_string(line_no) + ": column '" + header[c] +
                                  "' has non-numeric value '" + fields[c] + "'");
            cells.push_back(*v);
        }
    }
    const std::size_t n = raw_labels.size();
    if (n < 2) throw InsufficientDataError(source + ": need at least 2 data rows, found " + std::to_string(n));

    Dataset ds;
    ds.feature_names = std::move(names);
    ds.label_name = label_column;
    ds.provenance = source;
    ds.features = Eigen::Map<const Matrix>(cells.data(), static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(ds.feature_names.size()));

    // Labels: numeric 0/1, otherwise at most two distinct strings in sorted order.
    bool numeric = true;
    for (const auto& s : raw_labels) {
        const auto v = detail::parse_double(s);
        if (!v || (*v != 0.0 && *v != 1.0)) {
            numeric = false;
            break;
        }
    }
    ds.labels.resize(n);
    if (numeric) {
        for (std::size_t i = 0; i < n; ++i) ds.labels[i] = *detail::parse_double(raw_labels[i]) == 1.0 ? 1 : 0;
    } else {
        std::vector<std::string> distinct = raw_labels;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() > 2)
            throw SchemaError(source + ": label column '" + label_column + "' has " + std::to_string(distinct.size()) +
                              " distinct values; expected 2");
        ds.class_names[0] = distinct[0];
        ds.class_names[1] = distinct.size() > 1 ? distinct[1] : distinct[0] + "_other";
        for (std::size_t i = 0; i < n; ++i) ds.labels[i] = raw_labels[i] == distinct[0] ? 0 : 1;
    }
    ds.validate();
    return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return parse_csv(in, label_column, path);
}

/// Features first, label last; values in shortest round-trip form.
inline void write_csv(const Dataset& ds, std::ostream& out) {
    for (const auto& name : ds.feature_names) out << detail::csv_escape(name) << ',';
    out << detail::csv_escape(ds.label_name) << '\n';
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        for (std::size_t j = 0; j < ds.cols(); ++j)
            out << format_double(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << ',';
        out << detail::csv_escape(ds.class_names[static_cast<std::size_t>(ds.labels[i])]) << '\n';
    }
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_csv(ds, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Imputation

/// Per-feature median over non-missing cells.
inline Vector feature_medians(const Dataset& ds) {
    Vector med(ds.features.cols());
    std::vector<double> col;
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
        col.clear();
        for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
            if (!is_missing(ds.features(i, j))) col.push_back(ds.features(i, j));
        if (col.empty())
            throw ImputationError("feature '" + ds.feature_names[static_cast<std::size_t>(j)] +
                                  "' has no observed values");
        std::sort(col.begin(), col.end());
        const std::size_t m = col.size();
        med[j] = m % 2 == 1 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
    }
    return med;
}

/// Fills missing cells from externally supplied medians (training medians
/// applied to test or external cohorts).
inline Dataset impute_with(const Dataset& ds, const Vector& medians) {
    if (static_cast<std::size_t>(medians.size()) != ds.cols())
        throw DimensionError("impute_with", static_cast<std::size_t>(medians.size()), ds.cols());
    Dataset out = ds;
    for (Eigen::Index i = 0; i < out.features.rows(); ++i)
        for (Eigen::Index j = 0; j < out.features.cols(); ++j)
            if (is_missing(out.features(i, j))) out.features(i, j) = medians[j];
    return out;
}

inline Dataset impute_median(const Dataset& ds) {
    if (!ds.has_missing()) return ds;
    return impute_with(ds, feature_medians(ds));
}

// ---------------------------------------------------------------------------
// z-score normalisation

inline constexpr double kDegenerateStd = 1e-12;

struct NormStats {
    Vector means;
    Vector stds;  // 1.0 stored for degenerate features
    std::vector<bool> degenerate;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(means.size()); }
};

/// Sample mean and population standard deviation per feature.
inline NormStats zscore_fit(const Dataset& ds) {
    if (ds.has_missing()) throw PreconditionError("zscore_fit: dataset has missing values; impute first");
    if (ds.rows() == 0) throw InsufficientDataError("zscore_fit: empty dataset");
    const auto n = static_cast<double>(ds.rows());
    NormStats s;
    s.means = ds.features.colwise().sum().transpose() / n;
    s.stds.resize(ds.features.cols());
    s.degenerate.assign(ds.cols(), false);
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
        const double sq = (ds.features.col(j).array() - s.means[j]).square().sum();
        const double sd = std::sqrt(sq / n);
        if (sd < kDegenerateStd) {
            s.degenerate[static_cast<std::size_t>(j)] = true;
            s.stds[j] = 1.0;
        } else {
            s.stds[j] = sd;
        }
    }
    return s;
}

inline Dataset zscore_apply(const Dataset& ds, const NormStats& stats) {
    if (stats.dim() != ds.cols()) throw DimensionError("zscore_apply", stats.dim(), ds.cols());
    Dataset out = ds;
    for (Eigen::Index j = 0; j < out.features.cols(); ++j) {
        if (stats.degenerate[static_cast<std::size_t>(j)])
            out.features.col(j).setZero();
        else
            out.features.col(j) = (out.features.col(j).array() - stats.means[j]) / stats.stds[j];
    }
    out.normalized = true;
    return out;
}

/// Back to raw units; degenerate features return to their constant mean.
inline Dataset zscore_invert(const Dataset& ds, const NormStats& stats) {
    if (stats.dim() != ds.cols()) throw DimensionError("zscore_invert", stats.dim(), ds.cols());
    Dataset out = ds;
    for (Eigen::Index j = 0; j < out.features.cols(); ++j) {
        if (stats.degenerate[static_cast<std::size_t>(j)])
            out.features.col(j).setConstant(stats.means[j]);
        else
            out.features.col(j) = out.features.col(j).array() * stats.stds[j] + stats.means[j];
    }
    out.normalized = false;
    return out;
}

inline nlohmann::json to_json(const NormStats& s) {
    return {{"means", std::vector<double>(s.means.data(), s.means.data() + s.means.size())},
            {"stds", std::vector<double>(s.stds.data(), s.stds.data() + s.stds.size())},
            {"degenerate", s.degenerate}};
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
    const auto means = j.at("means").get<std::vector<double>>();
    const auto stds = j.at("stds").get<std::vector<double>>();
    const auto deg = j.at("degenerate").get<std::vector<bool>>();
    if (stds.size() != means.size() || deg.size() != means.size())
        throw SchemaError("NormStats JSON: array lengths differ");
    NormStats s;
    s.means = Eigen::Map<const Vector>(means.data(), static_cast<Eigen::Index>(means.size()));
    s.stds = Eigen::Map<const Vector>(stds.data(), static_cast<Eigen::Index>(stds.size()));
    s.degenerate = deg;
    return s;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffle, floor(train_fraction * n_class) rows to train. Index
/// lists come back in ascending dataset order.
inline SplitIndices split_indices(const Labels& labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw PreconditionError("split: train_fraction must lie in (0, 1)");
    if (labels.size() < 2) throw InsufficientDataError("split: need at least 2 rows");
    const Rng root(seed, 0x5B117);
    SplitIndices out;
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) members.push_back(i);
        if (members.size() < 2)
            throw StratificationError("split: class " + std::to_string(cls) + " has " +
                                      std::to_string(members.size()) + " member(s); need at least 2");
        Rng rng = root.child(static_cast<std::uint64_t>(cls));
        rng.shuffle(members.begin(), members.end());
        const auto n_train =
            static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(members.size())));
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    const auto idx = split_indices(ds.labels, train_fraction, seed);
    return {take_rows(ds, idx.train), take_rows(ds, idx.test)};
}

// ---------------------------------------------------------------------------
// Benchmark cohort simulator

struct CohortSpec {
    std::array<std::size_t, 2> n_per_class{979, 296};
    std::size_t n_features = 27;
    Vector class_mean_shift;
    double covariance_scale = 1.0;
    std::optional<Vector> external_drift;

    void validate() const {
        if (n_per_class[0] == 0 || n_per_class[1] == 0) throw PreconditionError("CohortSpec: class counts must be > 0");
        if (n_features == 0) throw PreconditionError("CohortSpec: n_features must be > 0");
        if (!(covariance_scale > 0.0)) throw PreconditionError("CohortSpec: covariance_scale must be > 0");
        if (static_cast<std::size_t>(class_mean_shift.size()) != n_features)
            throw DimensionError("CohortSpec.class_mean_shift", n_features,
                                 static_cast<std::size_t>(class_mean_shift.size()));
        if (external_drift && static_cast<std::size_t>(external_drift->size()) != n_features)
            throw DimensionError("CohortSpec.external_drift", n_features,
                                 static_cast<std::size_t>(external_drift->size()));
    }

    /// Default benchmark: 979 negatives / 296 positives over 27 features,
    /// with a class signal that decays geometrically across features.
    static CohortSpec internal_default() {
        CohortSpec s;
        s.n_per_class = {979, 296};
        s.n_features = 27;
        s.class_mean_shift.resize(27);
        for (Eigen::Index j = 0; j < 27; ++j) s.class_mean_shift[j] = 0.5 * std::exp(-static_cast<double>(j) / 8.0);
        return s;
    }

    /// Balanced 1014 / 1014 external cohort, mean-shifted on the first nine features.
    static CohortSpec external_default() {
        CohortSpec s = internal_default();
        s.n_per_class = {1014, 1014};
        Vector drift = Vector::Zero(27);
        drift.head(9).setConstant(0.3);
        s.external_drift = drift;
        return s;
    }
};

/// Unit diagonal with 0.3 on the first sub- and super-diagonal.
inline Matrix band_correlation(std::size_t d) {
    Matrix c = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j + 1 < static_cast<Eigen::Index>(d); ++j) c(j, j + 1) = c(j + 1, j) = 0.3;
    return c;
}

inline std::vector<std::string> default_feature_names(std::size_t d) {
    std::vector<std::string> names;
    const int width = d >= 100 ? 3 : 2;
    for (std::size_t j = 0; j < d; ++j) {
        std::string num = std::to_string(j + 1);
        names.push_back("f" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num);
    }
    return names;
}

inline Dataset simulate_cohort(const CohortSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.n_features);
    const Matrix cov = spec.covariance_scale * band_correlation(spec.n_features);
    const Eigen::LLT<Matrix> llt(cov);
    const Matrix chol = llt.matrixL();

    const std::size_t n = spec.n_per_class[0] + spec.n_per_class[1];
    Matrix f(static_cast<Eigen::Index>(n), d);
    Labels y(n);
    const Rng root(seed, 0xC0407);
    Eigen::Index row = 0;
    Vector z(d);
    for (int cls = 0; cls < 2; ++cls) {
        Vector mean = static_cast<double>(cls) * spec.class_mean_shift;
        if (spec.external_drift) mean += *spec.external_drift;
        Rng rng = root.child(static_cast<std::uint64_t>(cls));
        for (std::size_t i = 0; i < spec.n_per_class[static_cast<std::size_t>(cls)]; ++i, ++row) {
            for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
            f.row(row) = (mean + chol * z).transpose();
            y[static_cast<std::size_t>(row)] = cls;
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler = root.child(2);
    shuffler.shuffle(order.begin(), order.end());

    Dataset ds;
    ds.feature_names = default_feature_names(spec.n_features);
    ds.provenance = "simulated(seed=" + std::to_string(seed) + ")";
    ds.features = std::move(f);
    ds.labels = std::move(y);
    return take_rows(ds, order);
}

}  // namespace kdeknn
