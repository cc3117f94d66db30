#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <vector>

namespace kdeknn {

// Row-major so that one sample is one contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Labels = std::vector<int>;

/// Squared Euclidean distance, accumulated left to right over coordinates.
/// Every nearest-neighbour routine in the library funnels through this so
/// that index-backed and scanning searches agree bit for bit.
inline double squared_distance(const double* a, const double* b, std::size_t d) noexcept {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

inline bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

}  // namespace kdeknn
