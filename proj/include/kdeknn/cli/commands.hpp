#pragma once

// Command-line front end. Each command writes its artifacts into an output
// directory together with a manifest.json listing SHA-256 hashes; the run
// timestamp appears only in the manifest so data files stay reproducible.

#include "kdeknn/experiments.hpp"
#include "kdeknn/generators.hpp"
#include "kdeknn/privacy.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace kdeknn::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kStalled = 3, kIoError = 4 };

inline constexpr const char* kOutEnv = "KDEKNN_OUT";
inline constexpr const char* kVersion = "0.1.0";

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

/// Writes files under one directory and records them for the manifest.
class OutputDir {
public:
    explicit OutputDir(fs::path root) : root_(std::move(root)) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw IoError("cannot create output directory " + root_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& bytes) {
        const fs::path path = root_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out << bytes;
        out.close();
        if (!out) throw IoError("write failed: " + path.string());
        files_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }

    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    void write_dataset(const std::string& name, const Dataset& ds) {
        std::ostringstream s;
        write_csv(ds, s);
        write(name, s.str());
    }

    /// Manifest with the resolved configuration; the only file carrying a timestamp.
    void write_manifest(const std::string& command, const nlohmann::json& config) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm utc{};
        gmtime_r(&now, &utc);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
        nlohmann::json m{{"tool", "kdeknn"},
                         {"version", kVersion},
                         {"command", command},
                         {"config", config},
                         {"created", stamp},
                         {"files", files_}};
        const fs::path path = root_ / "manifest.json";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out << m.dump(2) << "\n";
        if (!out) throw IoError("write failed: " + path.string());
    }

    const fs::path& root() const noexcept { return root_; }

private:
    fs::path root_;
    nlohmann::json files_ = nlohmann::json::array();
};

struct CommonOptions {
    std::uint64_t seed = 42;
    std::string out;
    unsigned threads = 1;
    std::string format = "table";

    Exec exec() const { return Exec{threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads}; }

    std::string out_dir() const {
        if (!out.empty()) return out;
        if (const char* env = std::getenv(kOutEnv); env && *env) return env;
        return "kdeknn-out";
    }
};

struct SimulateOptions {
    std::vector<std::size_t> internal_counts{979, 296};
    std::vector<std::size_t> external_counts{1014, 1014};
};

struct GenerateOptions {
    std::string input;
    std::string label = "label";
    std::string method = "kde-knn";
    std::vector<std::size_t> per_class{540};
    std::size_t k = kDefaultValidatorK;
    std::size_t smote_k = 5;
    std::string bandwidth = "scott";
    std::size_t max_attempts = 0;
};

struct PrivacyOptions {
    std::string real;
    std::string synthetic;
    std::string label = "label";
    std::string method = "kde-knn";  // used when no synthetic file is given
    std::string direction = "synthetic-to-real";
    std::size_t bins = 30;
};

struct ExperimentOptions {
    int which = 2;
    std::string input;
    std::string external;
    std::string label = "label";
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> models{"rf", "svm-linear", "svm-rbf"};
    std::vector<std::string> methods{"smote", "kde", "kde-knn"};
    std::vector<double> fractions{1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
    std::string mixing_model = "svm-rbf";
    double train_fraction = 0.85;
    bool roc = false;
};

namespace detail {

inline std::array<std::size_t, 2> two_counts(const std::vector<std::size_t>& v, const char* what) {
    if (v.size() == 1) return {v[0], v[0]};
    if (v.size() == 2) return {v[0], v[1]};
    throw PreconditionError(std::string(what) + " takes one or two counts");
}

inline void print(std::ostream& out, const std::string& format, const nlohmann::json& j, const std::string& table) {
    if (format == "json")
        out << j.dump(2) << "\n";
    else
        out << table;
}

inline Dataset load_input(const std::string& path, const std::string& label) {
    if (!fs::exists(path)) throw IoError("input file not found: " + path);
    return load_csv(path, label);
}

}  // namespace detail

inline int cmd_simulate(const CommonOptions& c, const SimulateOptions& o, std::ostream& out) {
    CohortSpec in = CohortSpec::internal_default();
    in.n_per_class = detail::two_counts(o.internal_counts, "--internal");
    CohortSpec ex = CohortSpec::external_default();
    ex.n_per_class = detail::two_counts(o.external_counts, "--external");
    const Dataset cohort = simulate_cohort(in, c.seed);
    const Dataset external = simulate_cohort(ex, Rng(c.seed).child(0xE7).next_u64());

    OutputDir dir(c.out_dir());
    dir.write_dataset("cohort.csv", cohort);
    dir.write_dataset("external.csv", external);
    const nlohmann::json summary{{"seed", c.seed},
                                 {"cohort_rows", cohort.rows()},
                                 {"cohort_class_counts", {cohort.count(0), cohort.count(1)}},
                                 {"external_rows", external.rows()},
                                 {"external_class_counts", {external.count(0), external.count(1)}},
                                 {"features", cohort.cols()}};
    dir.write_manifest("simulate", summary);
    std::ostringstream t;
    t << "cohort.csv    " << cohort.rows() << " rows (" << cohort.count(0) << " / " << cohort.count(1) << ")\n"
      << "external.csv  " << external.rows() << " rows (" << external.count(0) << " / " << external.count(1) << ")\n";
    detail::print(out, c.format, summary, t.str());
    return kOk;
}

inline GenConfig gen_config(const CommonOptions& c, const GenerateOptions& o) {
    GenConfig g;
    g.per_class_counts = detail::two_counts(o.per_class, "--per-class");
    g.knn_k = o.k;
    g.smote_k = o.smote_k;
    g.rule = parse_bandwidth_rule(o.bandwidth);
    g.max_attempts = o.max_attempts;
    g.seed = c.seed;
    g.exec = c.exec();
    g.validate();
    return g;
}

/// load -> impute -> normalise -> generate -> de-normalise -> write.
inline int cmd_generate(const CommonOptions& c, const GenerateOptions& o, std::ostream& out) {
    const Method method = parse_method(o.method);
    const GenConfig g = gen_config(c, o);
    const Dataset raw = o.input.empty() ? benchmark_data(c.seed).cohort : detail::load_input(o.input, o.label);
    const Vector medians = feature_medians(raw);
    const Dataset imputed = impute_with(raw, medians);
    const NormStats norm = zscore_fit(imputed);
    const SyntheticBatch batch = generate(method, zscore_apply(imputed, norm), g);
    const Dataset synthetic = zscore_invert(batch.data, norm);

    nlohmann::json side = sidecar_json(batch);
    side["input"] = o.input.empty() ? "simulated" : fs::path(o.input).filename().string();
    side["normalization"] = to_json(norm);

    OutputDir dir(c.out_dir());
    dir.write_dataset("synthetic.csv", synthetic);
    dir.write_json("synthetic.json", side);
    dir.write_manifest("generate", {{"method", to_string(method)},
                                    {"seed", c.seed},
                                    {"per_class", g.per_class_counts},
                                    {"k", g.knn_k},
                                    {"smote_k", g.smote_k},
                                    {"bandwidth", to_string(g.rule)},
                                    {"max_attempts", g.attempt_cap()},
                                    {"input", side["input"]}});
    std::ostringstream t;
    t << "synthetic.csv  " << synthetic.rows() << " rows via " << to_string(method) << "; acceptance "
      << batch.acceptance_rate[0] << " / " << batch.acceptance_rate[1] << "\n";
    detail::print(out, c.format, side, t.str());
    return kOk;
}

/// Synthetic-to-real DCR against the real-real baseline, both in the
/// z-scored space of the real data.
inline int cmd_privacy(const CommonOptions& c, const PrivacyOptions& o, std::ostream& out) {
    const DcrDirection direction = parse_dcr_direction(o.direction);
    if (o.bins == 0) throw PreconditionError("--bins must be >= 1");
    Dataset real_raw;
    if (o.real.empty())
        real_raw = prepare_partition(benchmark_data(c.seed), 0.85, c.seed).train;
    else
        real_raw = detail::load_input(o.real, o.label);
    const Vector medians = feature_medians(real_raw);
    const NormStats norm = zscore_fit(impute_with(real_raw, medians));
    const Dataset real = zscore_apply(impute_with(real_raw, medians), norm);

    Dataset synthetic;
    std::string source;
    if (o.synthetic.empty()) {
        GenConfig g;
        g.seed = c.seed;
        g.exec = c.exec();
        const Method method = parse_method(o.method);
        synthetic = generate(method, real, g).data;
        source = to_string(method) + " (generated)";
    } else {
        synthetic = zscore_apply(impute_with(detail::load_input(o.synthetic, o.label), medians), norm);
        source = fs::path(o.synthetic).filename().string();
    }

    const DcrReport report = dcr_histogram(dcr(real.features, synthetic.features, direction, c.exec()), o.bins);
    const DcrReport baseline = dcr_histogram(dcr_baseline(real.features, c.exec()), o.bins);
    const bool farther = report.mean_dcr > baseline.mean_dcr;
    std::ostringstream verdict;
    verdict << "mean DCR " << format_double(report.mean_dcr) << (farther ? " > " : " <= ")
            << "real-real baseline " << format_double(baseline.mean_dcr) << ": synthetic records are "
            << (farther ? "farther from" : "no farther from") << " real records than real records are from each other";

    nlohmann::json j{{"synthetic_source", source},
                     {"report", to_json(report)},
                     {"baseline", to_json(baseline)},
                     {"synthetic_exceeds_baseline", farther},
                     {"verdict", verdict.str()}};
    OutputDir dir(c.out_dir());
    dir.write_json("dcr.json", j);
    std::ostringstream h, hb;
    write_histogram_csv(report, h);
    write_histogram_csv(baseline, hb);
    dir.write("dcr_histogram.csv", h.str());
    dir.write("dcr_baseline_histogram.csv", hb.str());
    dir.write_manifest("privacy", {{"seed", c.seed},
                                   {"direction", to_string(direction)},
                                   {"bins", o.bins},
                                   {"real", o.real.empty() ? "simulated" : o.real},
                                   {"synthetic", source}});
    if (c.format == "csv")
        out << h.str();
    else
        detail::print(out, c.format, j, verdict.str() + "\n");
    return kOk;
}

inline ExperimentConfig experiment_config(const CommonOptions& c, const ExperimentOptions& o) {
    ExperimentConfig cfg;
    cfg.seeds = o.seeds.empty() ? std::vector<std::uint64_t>{c.seed, c.seed + 1, c.seed + 2} : o.seeds;
    cfg.train_fraction = o.train_fraction;
    cfg.specs.clear();
    for (const auto& m : o.models) cfg.specs.push_back(ClassifierSpec::of(parse_classifier_kind(m)));
    cfg.methods.clear();
    for (const auto& m : o.methods) cfg.methods.push_back(parse_method(m));
    cfg.real_fractions = o.fractions;
    cfg.mixing_spec = ClassifierSpec::of(parse_classifier_kind(o.mixing_model));
    cfg.exec = c.exec();
    cfg.keep_roc = o.roc;
    if (cfg.specs.empty()) throw PreconditionError("--models must be non-empty");
    if (o.which == 2 && cfg.methods.empty()) throw PreconditionError("--methods must be non-empty");
    cfg.validate();
    return cfg;
}

inline int cmd_experiment(const CommonOptions& c, const ExperimentOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = experiment_config(c, o);
    ExperimentData data;
    if (o.input.empty() != o.external.empty())
        throw PreconditionError("--input and --external must be given together");
    if (o.input.empty())
        data = benchmark_data(c.seed);
    else
        data = {detail::load_input(o.input, o.label), detail::load_input(o.external, o.label)};

    const ExperimentReport rep = run_experiment(o.which, data, cfg);
    const std::string stem = "experiment" + std::to_string(o.which);
    const nlohmann::json j = to_json(rep);
    const std::string table = table_string(rep);
    OutputDir dir(c.out_dir());
    dir.write_json(stem + ".json", j);
    dir.write(stem + ".txt", table);
    if (o.roc) {
        for (std::size_t r = 0; r < rep.rows.size(); ++r) {
            const auto& row = rep.rows[r];
            for (std::size_t k = 0; k < row.test_roc.size(); ++k) {
                const std::string cell = stem + "_row" + std::to_string(r) + "_rep" + std::to_string(k);
                std::ostringstream a, b;
                write_roc_csv(row.test_roc[k], a);
                write_roc_csv(row.external_roc[k], b);
                dir.write(cell + "_test_roc.csv", a.str());
                dir.write(cell + "_external_roc.csv", b.str());
            }
        }
    }
    nlohmann::json conf{{"experiment", o.which},
                        {"seed", c.seed},
                        {"seeds", cfg.seeds},
                        {"models", o.models},
                        {"train_fraction", cfg.train_fraction},
                        {"input", o.input.empty() ? "simulated" : o.input}};
    if (o.which == 2) conf["methods"] = o.methods;
    if (o.which == 3) {
        conf["fractions"] = o.fractions;
        conf["mixing_model"] = o.mixing_model;
    }
    dir.write_manifest("experiment", conf);
    detail::print(out, c.format, j, table);
    return kOk;
}

/// Parses argv, dispatches, and maps errors to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Synthetic tabular data generation and evaluation", "kdeknn"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI file; [section] keys match subcommand options, flags win");
    app.set_version_flag("--version", kVersion);

    CommonOptions common;
    app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
    app.add_option("--out", common.out, std::string("Output directory (default $") + kOutEnv + " or ./kdeknn-out)");
    app.add_option("--threads", common.threads, "Worker threads; 0 uses every core")->capture_default_str();
    app.add_option("--format", common.format, "Summary printed to stdout")
        ->check(CLI::IsMember({"json", "table", "csv"}))
        ->capture_default_str();

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Write a simulated internal cohort and external cohort");
    s->add_option("--internal", sim.internal_counts, "Internal cohort class counts (negative positive)")
        ->expected(1, 2)
        ->capture_default_str();
    s->add_option("--external", sim.external_counts, "External cohort class counts")->expected(1, 2)->capture_default_str();

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a fully synthetic balanced dataset");
    g->add_option("--input", gen.input, "Training CSV (default: simulated cohort)")->check(CLI::ExistingFile);
    g->add_option("--label", gen.label, "Label column")->capture_default_str();
    g->add_option("--method", gen.method, "smote, kde or kde-knn")
        ->check(CLI::IsMember({"smote", "kde", "kde-knn", "kde_knn"}))
        ->capture_default_str();
    g->add_option("--per-class", gen.per_class, "Rows per class (one value, or one per class)")
        ->expected(1, 2)
        ->capture_default_str();
    g->add_option("--k", gen.k, "Validator neighbours")->capture_default_str();
    g->add_option("--smote-k", gen.smote_k, "SMOTE neighbours")->capture_default_str();
    g->add_option("--bandwidth", gen.bandwidth, "scott or silverman")
        ->check(CLI::IsMember({"scott", "silverman"}))
        ->capture_default_str();
    g->add_option("--max-attempts", gen.max_attempts, "Candidate budget (0: 1000 x requested rows)");

    PrivacyOptions priv;
    auto* p = app.add_subcommand("privacy", "Distance-to-closest-record audit");
    p->add_option("--real", priv.real, "Real CSV (default: simulated training split)")->check(CLI::ExistingFile);
    p->add_option("--synthetic", priv.synthetic, "Synthetic CSV (default: generate with --method)")
        ->check(CLI::ExistingFile);
    p->add_option("--label", priv.label, "Label column")->capture_default_str();
    p->add_option("--method", priv.method, "Generator used when --synthetic is absent")
        ->check(CLI::IsMember({"smote", "kde", "kde-knn", "kde_knn"}))
        ->capture_default_str();
    p->add_option("--direction", priv.direction, "synthetic-to-real or real-to-synthetic")->capture_default_str();
    p->add_option("--bins", priv.bins, "Histogram bins")->capture_default_str();

    ExperimentOptions ex;
    auto* e = app.add_subcommand("experiment", "Run a utility experiment (1 real, 2 synthetic, 3 mixed)");
    e->add_option("which", ex.which, "Experiment number")->check(CLI::Range(1, 3))->capture_default_str();
    e->add_option("--input", ex.input, "Internal cohort CSV")->check(CLI::ExistingFile);
    e->add_option("--external", ex.external, "External cohort CSV")->check(CLI::ExistingFile);
    e->add_option("--label", ex.label, "Label column")->capture_default_str();
    e->add_option("--seeds", ex.seeds, "Repeat seeds (default: seed, seed+1, seed+2)");
    e->add_option("--models", ex.models, "rf, svm-linear, svm-rbf")->capture_default_str();
    e->add_option("--methods", ex.methods, "Generators for experiment 2")->capture_default_str();
    e->add_option("--fractions", ex.fractions, "Real fractions for experiment 3")->capture_default_str();
    e->add_option("--mixing-model", ex.mixing_model, "Model for experiment 3")->capture_default_str();
    e->add_option("--train-fraction", ex.train_fraction, "Share of the cohort used for training")->capture_default_str();
    e->add_flag("--roc", ex.roc, "Write per-cell ROC curves");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*s) return cmd_simulate(common, sim, out);
        if (*g) return cmd_generate(common, gen, out);
        if (*p) return cmd_privacy(common, priv, out);
        return cmd_experiment(common, ex, out);
    } catch (const GenerationStalled& x) {
        err << "error: " << x.what() << "\n";
        return kStalled;
    } catch (const IoError& x) {
        err << "error: " << x.what() << "\n";
        return kIoError;
    } catch (const Error& x) {
        err << "error: " << x.what() << "\n";
        return kConfigError;
    } catch (const std::exception& x) {
        err << "internal error: " << x.what() << "\n";
        return kFailure;
    }
}

}  // namespace kdeknn::cli
