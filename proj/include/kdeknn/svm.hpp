#pragma once

// Soft-margin C-SVM trained by sequential minimal optimisation on the dual,
// with second-order working-set selection (Fan, Chen & Lin, 2005).

#include "kdeknn/error.hpp"
#include "kdeknn/parallel.hpp"
#include "kdeknn/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace kdeknn {

enum class KernelKind { linear, rbf };

struct SvmParams {
    double c = 1.0;
    KernelKind kernel = KernelKind::rbf;
    double gamma = 0.0;  // <= 0: 1 / (d * mean feature variance)
    double tolerance = 1e-3;
    std::size_t max_passes = 10000;  // one pass = n pair updates
};

/// 1 / (d * mean per-feature population variance); 1 if the data are constant.
inline double scale_gamma(const Matrix& x) {
    const RowVector mean = x.colwise().mean();
    const double mean_var = (x.rowwise() - mean).array().square().sum() / static_cast<double>(x.rows() * x.cols());
    return mean_var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * mean_var) : 1.0;
}

class SvmModel {
public:
    static SvmModel fit(const Matrix& x, const Labels& labels, SvmParams p, Exec exec = {});

    /// Signed margin; positive leans to class 1.
    double decision(const double* row) const {
        if (kernel_ == KernelKind::linear) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < weights_.size(); ++j) s += weights_[j] * row[j];
            return s + bias_;
        }
        double s = 0.0;
        const auto d = static_cast<std::size_t>(support_.cols());
        for (Eigen::Index i = 0; i < support_.rows(); ++i)
            s += coef_[i] * std::exp(-gamma_ * squared_distance(support_.row(i).data(), row, d));
        return s + bias_;
    }

    KernelKind kernel() const noexcept { return kernel_; }
    double gamma() const noexcept { return gamma_; }
    double bias() const noexcept { return bias_; }
    const Vector& weights() const noexcept { return weights_; }  // linear only
    const Matrix& support_vectors() const noexcept { return support_; }
    const Vector& dual_coef() const noexcept { return coef_; }  // alpha_i * y_i
    std::size_t iterations() const noexcept { return iterations_; }
    bool converged() const noexcept { return converged_; }

private:
    KernelKind kernel_ = KernelKind::rbf;
    double gamma_ = 1.0;
    double bias_ = 0.0;
    Vector weights_;
    Matrix support_;
    Vector coef_;
    std::size_t iterations_ = 0;
    bool converged_ = false;
};

inline SvmModel SvmModel::fit(const Matrix& x, const Labels& labels, SvmParams p, Exec exec) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (n == 0) throw InsufficientDataError("SVM: empty training data");
    if (labels.size() != n) throw DimensionError("SVM labels", n, labels.size());
    if (!(p.c > 0.0) || !(p.tolerance > 0.0)) throw PreconditionError("SVM: C and tolerance must be positive");
    if (!x.allFinite()) throw PreconditionError("SVM: non-finite training features");
    const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
    const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
    if (!has0 || !has1) throw PreconditionError("SVM: training data must contain both classes");

    SvmModel m;
    m.kernel_ = p.kernel;
    m.gamma_ = p.kernel == KernelKind::rbf ? (p.gamma > 0.0 ? p.gamma : scale_gamma(x)) : 0.0;

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;

    // Dense kernel matrix.
    const auto d = static_cast<std::size_t>(x.cols());
    Matrix k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for(n, exec, [&](std::size_t i) {
        const double* xi = x.row(static_cast<Eigen::Index>(i)).data();
        for (std::size_t j = 0; j < n; ++j) {
            const double* xj = x.row(static_cast<Eigen::Index>(j)).data();
            double v;
            if (p.kernel == KernelKind::linear) {
                v = 0.0;
                for (std::size_t t = 0; t < d; ++t) v += xi[t] * xj[t];
            } else {
                v = std::exp(-m.gamma_ * squared_distance(xi, xj, d));
            }
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    });
    auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };

    constexpr double kTau = 1e-12;
    const double c = p.c;
    std::vector<double> alpha(n, 0.0), grad(n, -1.0);
    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };

    const std::size_t max_iter = p.max_passes * n;
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t)
            if (in_up(t) && -y[t] * grad[t] >= gmax) {
                gmax = -y[t] * grad[t];
                i = t;
            }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double obj_min = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double yg = y[t] * grad[t];
            gmax2 = std::max(gmax2, yg);
            if (i == n) continue;
            const double grad_diff = gmax + yg;
            if (grad_diff > 0.0) {
                double quad = k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +
                              k(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) -
                              2.0 * k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
                if (quad <= 0.0) quad = kTau;
                const double obj = -(grad_diff * grad_diff) / quad;
                if (obj <= obj_min) {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        if (i == n || j == n || gmax + gmax2 < p.tolerance) {
            m.converged_ = true;
            break;
        }

        const double ai_old = alpha[i], aj_old = alpha[j];
        const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
        if (y[i] != y[j]) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }
        const double dai = alpha[i] - ai_old, daj = alpha[j] - aj_old;
        for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * dai + q(t, j) * daj;
    }
    m.iterations_ = iter;

    // Bias from free vectors, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    m.bias_ = -rho;

    std::vector<std::size_t> sv;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0) sv.push_back(t);
    m.support_.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    m.coef_.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        m.support_.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(sv[s]));
        m.coef_[static_cast<Eigen::Index>(s)] = alpha[sv[s]] * y[sv[s]];
    }
    if (p.kernel == KernelKind::linear) m.weights_ = m.support_.transpose() * m.coef_;
    return m;
}

}  // namespace kdeknn
