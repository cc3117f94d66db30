#pragma once

// Multivariate Gaussian kernel density estimation with a full bandwidth
// matrix H = L L^T shared by every kernel.

#include "kdeknn/error.hpp"
#include "kdeknn/parallel.hpp"
#include "kdeknn/rng.hpp"
#include "kdeknn/types.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace kdeknn {

enum class BandwidthRule { scott, silverman };

inline std::string to_string(BandwidthRule r) { return r == BandwidthRule::scott ? "scott" : "silverman"; }

inline BandwidthRule parse_bandwidth_rule(const std::string& s) {
    if (s == "scott") return BandwidthRule::scott;
    if (s == "silverman") return BandwidthRule::silverman;
    throw PreconditionError("unknown bandwidth rule '" + s + "' (expected scott or silverman)");
}

inline constexpr double kDefaultRegularization = 1e-6;

/// Squared bandwidth factor: H = factor^2 * covariance.
inline double bandwidth_factor_squared(BandwidthRule rule, std::size_t n, std::size_t d) {
    const double nd = static_cast<double>(n), dd = static_cast<double>(d);
    const double scott = std::pow(nd, -1.0 / (dd + 4.0));
    const double f = rule == BandwidthRule::scott ? scott : std::pow(4.0 / (dd + 2.0), 1.0 / (dd + 4.0)) * scott;
    return f * f;
}

/// Unbiased sample covariance (n - 1 denominator).
inline Matrix sample_covariance(const Matrix& points) {
    const RowVector mean = points.colwise().mean();
    const Matrix centered = points.rowwise() - mean;
    return (centered.transpose() * centered) / static_cast<double>(points.rows() - 1);
}

class KdeModel {
public:
    /// Model with an explicit bandwidth matrix. Throws FitError if H is not
    /// positive definite.
    static KdeModel with_bandwidth(Matrix support, const Matrix& bandwidth, BandwidthRule rule = BandwidthRule::scott,
                                   double regularization = 0.0) {
        const auto d = support.cols();
        if (support.rows() < 1) throw InsufficientDataError("KdeModel: empty support");
        if (bandwidth.rows() != d || bandwidth.cols() != d)
            throw DimensionError("KdeModel bandwidth", static_cast<std::size_t>(d), static_cast<std::size_t>(bandwidth.rows()));
        const Eigen::LLT<Matrix> llt(bandwidth);
        Matrix chol = llt.matrixL();
        if (llt.info() != Eigen::Success || !chol.allFinite() || (chol.diagonal().array() <= 0.0).any())
            throw FitError("bandwidth matrix is not positive definite; increase the regularization");
        return KdeModel(std::move(support), std::move(chol), rule, regularization);
    }

    /// Model from a lower-triangular factor L (H = L L^T).
    static KdeModel with_factor(Matrix support, Matrix factor, BandwidthRule rule, double regularization) {
        const auto d = support.cols();
        if (factor.rows() != d || factor.cols() != d)
            throw DimensionError("KdeModel factor", static_cast<std::size_t>(d), static_cast<std::size_t>(factor.rows()));
        if ((factor.diagonal().array() <= 0.0).any()) throw FitError("bandwidth factor must have a positive diagonal");
        factor.triangularView<Eigen::StrictlyUpper>().setZero();
        return KdeModel(std::move(support), std::move(factor), rule, regularization);
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(support_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(support_.cols()); }
    const Matrix& support() const noexcept { return support_; }
    const Matrix& bandwidth_factor() const noexcept { return factor_; }
    Matrix bandwidth() const { return factor_ * factor_.transpose(); }
    BandwidthRule rule() const noexcept { return rule_; }
    double regularization() const noexcept { return regularization_; }
    double log_norm() const noexcept { return log_norm_; }

    /// log of (1/n) sum_i N(x; s_i, H), accumulated with a max shift.
    double log_density(const Vector& x) const {
        if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionError("KDE density", dim(), x.size());
        const auto n = support_.rows();
        std::vector<double> half_sq(static_cast<std::size_t>(n));
        double best = std::numeric_limits<double>::infinity();
        Vector diff(x.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            // difference first, then whiten: avoids cancellation far from the origin
            diff = x - support_.row(i).transpose();
            factor_.triangularView<Eigen::Lower>().solveInPlace(diff);
            const double q = 0.5 * diff.squaredNorm();
            half_sq[static_cast<std::size_t>(i)] = q;
            best = std::min(best, q);
        }
        double acc = 0.0;
        for (double q : half_sq) acc += std::exp(best - q);
        return log_norm_ - best + std::log(acc) - std::log(static_cast<double>(n));
    }

    double density(const Vector& x) const { return std::exp(log_density(x)); }

    /// count rows; row r uses the stream rng.child(r), so output does not
    /// depend on exec.threads.
    Matrix sample(std::size_t count, const Rng& rng, Exec exec = {}) const {
        if (count == 0) throw PreconditionError("KDE sample: count must be >= 1");
        return sample_range(0, count, rng, exec);
    }

    /// Rows first..first+count-1 of the infinite sequence defined by rng.
    Matrix sample_range(std::size_t first, std::size_t count, const Rng& rng, Exec exec = {}) const {
        Matrix out(static_cast<Eigen::Index>(count), support_.cols());
        parallel_for(count, exec, [&](std::size_t r) {
            Rng row_rng = rng.child(first + r);
            const auto i = static_cast<Eigen::Index>(row_rng.uniform_index(size()));
            Vector z(support_.cols());
            for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = row_rng.normal();
            out.row(static_cast<Eigen::Index>(r)) =
                support_.row(i) + (factor_.triangularView<Eigen::Lower>() * z).transpose();
        });
        return out;
    }

private:
    KdeModel(Matrix support, Matrix factor, BandwidthRule rule, double regularization)
        : support_(std::move(support)), factor_(std::move(factor)), rule_(rule), regularization_(regularization) {
        const double d = static_cast<double>(support_.cols());
        log_norm_ = -0.5 * d * std::log(2.0 * std::numbers::pi) - factor_.diagonal().array().log().sum();
    }

    Matrix support_;
    Matrix factor_;
    BandwidthRule rule_;
    double regularization_;
    double log_norm_ = 0.0;
};

/// H = factor^2(rule, n, d) * (sample covariance + regularization * I).
inline KdeModel fit_kde(const Matrix& points, BandwidthRule rule = BandwidthRule::scott,
                        double regularization = kDefaultRegularization) {
    if (points.rows() < 2) throw InsufficientDataError("KDE fit: need at least 2 points");
    if (points.cols() < 1) throw PreconditionError("KDE fit: need at least 1 feature");
    if (!points.allFinite()) throw PreconditionError("KDE fit: non-finite input");
    if (regularization < 0.0) throw PreconditionError("KDE fit: regularization must be >= 0");
    const auto n = static_cast<std::size_t>(points.rows());
    const auto d = static_cast<std::size_t>(points.cols());
    Matrix cov = sample_covariance(points);
    cov.diagonal().array() += regularization;
    const Matrix h = bandwidth_factor_squared(rule, n, d) * cov;
    try {
        return KdeModel::with_bandwidth(points, h, rule, regularization);
    } catch (const FitError&) {
        throw FitError("KDE fit: bandwidth matrix not positive definite with regularization " +
                       std::to_string(regularization) + "; use a larger regularization");
    }
}

inline nlohmann::json to_json(const KdeModel& m) {
    auto rows = [](const Matrix& a) {
        std::vector<std::vector<double>> out(static_cast<std::size_t>(a.rows()));
        for (Eigen::Index i = 0; i < a.rows(); ++i) out[static_cast<std::size_t>(i)].assign(a.row(i).data(), a.row(i).data() + a.cols());
        return out;
    };
    return {{"rule", to_string(m.rule())},
            {"regularization", m.regularization()},
            {"support", rows(m.support())},
            {"bandwidth_factor", rows(m.bandwidth_factor())}};
}

inline KdeModel kde_from_json(const nlohmann::json& j) {
    auto matrix = [](const nlohmann::json& a) {
        const auto rows = a.get<std::vector<std::vector<double>>>();
        Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (static_cast<Eigen::Index>(rows[i].size()) != m.cols()) throw SchemaError("KdeModel JSON: ragged matrix");
            for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        return m;
    };
    return KdeModel::with_factor(matrix(j.at("support")), matrix(j.at("bandwidth_factor")),
                                 parse_bandwidth_rule(j.at("rule").get<std::string>()),
                                 j.at("regularization").get<double>());
}

}  // namespace kdeknn
