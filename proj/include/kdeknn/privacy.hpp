#pragma once

// Distance to closest record (DCR).

#include "kdeknn/dataset.hpp"
#include "kdeknn/error.hpp"
#include "kdeknn/kdtree.hpp"
#include "kdeknn/parallel.hpp"
#include "kdeknn/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace kdeknn {

enum class DcrDirection { synthetic_to_real, real_to_synthetic, real_to_real_baseline };

inline std::string to_string(DcrDirection d) {
    switch (d) {
        case DcrDirection::synthetic_to_real: return "synthetic_to_real";
        case DcrDirection::real_to_synthetic: return "real_to_synthetic";
        case DcrDirection::real_to_real_baseline: return "real_to_real_baseline";
    }
    return "?";
}

inline DcrDirection parse_dcr_direction(const std::string& s) {
    if (s == "synthetic_to_real" || s == "synthetic-to-real" || s == "s2r") return DcrDirection::synthetic_to_real;
    if (s == "real_to_synthetic" || s == "real-to-synthetic" || s == "r2s") return DcrDirection::real_to_synthetic;
    throw PreconditionError("unknown DCR direction '" + s + "'");
}

struct HistogramBin {
    double lower;
    double upper;
    std::size_t count;
};

struct DcrReport {
    std::vector<double> distances;  // one per probe row
    double mean_dcr = 0.0;
    DcrDirection direction = DcrDirection::synthetic_to_real;
    std::vector<HistogramBin> histogram;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Nearest reference row for every probe row.
inline std::vector<double> nearest_distances(const Matrix& reference, const Matrix& probes, Exec exec) {
    const KdTree tree(reference);
    std::vector<double> out(static_cast<std::size_t>(probes.rows()));
    parallel_for(out.size(), exec, [&](std::size_t i) {
        out[i] = tree.query(probes.row(static_cast<Eigen::Index>(i)).data(), 1).front().distance;
    });
    return out;
}

}  // namespace detail

/// Euclidean DCR. synthetic_to_real probes each synthetic row against the real
/// set; real_to_synthetic probes each real row against the synthetic set.
inline DcrReport dcr(const Matrix& real, const Matrix& synthetic,
                     DcrDirection direction = DcrDirection::synthetic_to_real, Exec exec = {}) {
    if (real.rows() == 0 || synthetic.rows() == 0) throw InsufficientDataError("dcr: empty input");
    if (real.cols() != synthetic.cols())
        throw DimensionError("dcr", static_cast<std::size_t>(real.cols()), static_cast<std::size_t>(synthetic.cols()));
    if (direction == DcrDirection::real_to_real_baseline)
        throw PreconditionError("dcr: use dcr_baseline for the real-to-real baseline");
    DcrReport r;
    r.direction = direction;
    r.distances = direction == DcrDirection::synthetic_to_real ? detail::nearest_distances(real, synthetic, exec)
                                                               : detail::nearest_distances(synthetic, real, exec);
    r.mean_dcr = detail::mean_of(r.distances);
    return r;
}

/// Leave-one-out nearest distance within the real set.
inline DcrReport dcr_baseline(const Matrix& real, Exec exec = {}) {
    if (real.rows() < 2) throw InsufficientDataError("dcr_baseline: need at least 2 rows");
    const KdTree tree(real);
    DcrReport r;
    r.direction = DcrDirection::real_to_real_baseline;
    r.distances.resize(static_cast<std::size_t>(real.rows()));
    parallel_for(r.distances.size(), exec, [&](std::size_t i) {
        r.distances[i] = tree.query(real.row(static_cast<Eigen::Index>(i)).data(), 1, i).front().distance;
    });
    r.mean_dcr = detail::mean_of(r.distances);
    return r;
}

/// Equal-width bins over [0, max distance]; each bin is [lower, upper) except
/// the last, which also takes its upper edge.
inline DcrReport dcr_histogram(DcrReport report, std::size_t bins) {
    if (bins == 0) throw PreconditionError("dcr_histogram: bins must be >= 1");
    const double top = report.distances.empty() ? 0.0 : *std::max_element(report.distances.begin(), report.distances.end());
    const double width = top / static_cast<double>(bins);
    report.histogram.assign(bins, HistogramBin{0.0, 0.0, 0});
    for (std::size_t b = 0; b < bins; ++b) {
        report.histogram[b].lower = width * static_cast<double>(b);
        report.histogram[b].upper = b + 1 == bins ? top : width * static_cast<double>(b + 1);
    }
    for (double v : report.distances) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>(v / width) : 0;
        b = std::min(b, bins - 1);
        // guard against v / width rounding across an edge
        while (b > 0 && v < report.histogram[b].lower) --b;
        while (b + 1 < bins && v >= report.histogram[b + 1].lower) ++b;
        ++report.histogram[b].count;
    }
    return report;
}

inline nlohmann::json to_json(const DcrReport& r) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.histogram) bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
    return {{"direction", to_string(r.direction)},
            {"mean_dcr", r.mean_dcr},
            {"n", r.distances.size()},
            {"histogram", bins},
            {"distances", r.distances}};
}

/// bin_center,count
inline void write_histogram_csv(const DcrReport& r, std::ostream& out) {
    out << "bin_center,count\n";
    for (const auto& b : r.histogram) out << format_double(0.5 * (b.lower + b.upper)) << ',' << b.count << '\n';
}

}  // namespace kdeknn
