#pragma once

#include "sispca/common.hpp"

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

namespace sispca::kernels {

/// Symmetric n x n kernel matrix plus a flag recording whether the
/// double-centering H K H has already been applied.
struct KernelMatrix {
    Matrix values;
    bool centered = false;

    Index size() const { return values.rows(); }
};

/// A supervision target: categorical labels (delta kernel), continuous
/// columns (linear kernel), or identity (unsupervised, K = I).
struct SupervisionTarget {
    struct Categorical {
        std::vector<std::string> labels;
    };
    struct Continuous {
        Matrix values;  // n x d
    };
    struct Identity {};

    std::variant<Categorical, Continuous, Identity> kind;
    std::string name;

    static SupervisionTarget categorical(std::vector<std::string> labels, std::string name = "") {
        return SupervisionTarget{Categorical{std::move(labels)}, std::move(name)};
    }
    static SupervisionTarget continuous(Matrix values, std::string name = "") {
        return SupervisionTarget{Continuous{std::move(values)}, std::move(name)};
    }
    static SupervisionTarget identity(std::string name = "") {
        return SupervisionTarget{Identity{}, std::move(name)};
    }

    bool is_identity() const { return std::holds_alternative<Identity>(kind); }
    bool is_categorical() const { return std::holds_alternative<Categorical>(kind); }
    bool is_continuous() const { return std::holds_alternative<Continuous>(kind); }

    Index sample_count() const {
        if (is_categorical()) return static_cast<Index>(std::get<Categorical>(kind).labels.size());
        if (is_continuous()) return std::get<Continuous>(kind).values.rows();
        return -1;  // identity adapts to the data
    }
};

/// Double-centers K in place: HKH with H = I - (1/n) 1 1^T, computed by
/// subtracting row and column means and adding back the grand mean. H is
/// never materialized.
inline Matrix centered_values(const Matrix& K) {
    if (K.rows() < 2) throw DimensionError("center_kernel: need n >= 2 samples");
    if (K.rows() != K.cols()) throw DimensionError("center_kernel: kernel matrix must be square");
    const Vector row_means = K.rowwise().mean();
    const Vector col_means = K.colwise().mean();
    const double grand_mean = K.mean();
    Matrix out = K;
    out.colwise() -= row_means;
    out.rowwise() -= col_means.transpose();
    out.array() += grand_mean;
    return out;
}

inline KernelMatrix center_kernel(const KernelMatrix& K) {
    if (K.centered) return K;
    return KernelMatrix{centered_values(K.values), true};
}

/// Dirac delta kernel: K[i,j] = 1 iff labels match.
inline KernelMatrix delta_kernel(const SupervisionTarget& target) {
    if (!target.is_categorical())
        throw ConfigError("delta_kernel: target '" + target.name + "' is not categorical");
    const auto& labels = std::get<SupervisionTarget::Categorical>(target.kind).labels;
    const Index n = static_cast<Index>(labels.size());
    Matrix K(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) K(i, j) = labels[i] == labels[j] ? 1.0 : 0.0;
    return KernelMatrix{std::move(K), false};
}

/// Column-centers Y, warning about constant columns.
inline Matrix center_columns(const Matrix& Y, const std::string& name = "") {
    Matrix out = Y;
    for (Index c = 0; c < out.cols(); ++c) {
        const double mean = out.col(c).mean();
        out.col(c).array() -= mean;
        if (out.col(c).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, std::abs(mean)))
            warn("linear_kernel: column " + std::to_string(c) +
                 (name.empty() ? "" : " of target '" + name + "'") + " is constant");
    }
    return out;
}

/// Linear kernel K = Y Y^T after per-column centering; for multivariate Y
/// this equals the sum of per-dimension kernels.
inline KernelMatrix linear_kernel(const SupervisionTarget& target) {
    if (!target.is_continuous())
        throw ConfigError("linear_kernel: target '" + target.name + "' is not continuous");
    const Matrix Yc = center_columns(std::get<SupervisionTarget::Continuous>(target.kind).values,
                                     target.name);
    return KernelMatrix{Yc * Yc.transpose(), false};
}

/// Median of all pairwise Euclidean distances. For n > 2000 the median is
/// estimated from one million uniformly sampled pairs drawn with a fixed
/// sub-seed, so results stay deterministic and cost stays bounded.
inline double median_pairwise_distance(const Matrix& X) {
    const Index n = X.rows();
    if (n < 2) throw DimensionError("median_pairwise_distance: need n >= 2");
    std::vector<double> dists;
    if (n <= 2000) {
        dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j) dists.push_back((X.row(i) - X.row(j)).norm());
    } else {
        constexpr std::size_t kSamplePairs = 1000000;
        Rng rng(0x5ca1ab1edc0ffeeull);
        dists.reserve(kSamplePairs);
        for (std::size_t t = 0; t < kSamplePairs; ++t) {
            const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
            Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
            if (j >= i) ++j;
            dists.push_back((X.row(i) - X.row(j)).norm());
        }
    }
    // numpy-style median: average of the two middle order statistics when even
    const std::size_t m = dists.size();
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double hi = *mid;
    if (m % 2 == 1) return hi;
    double lo = *std::max_element(dists.begin(), mid);
    return 0.5 * (lo + hi);
}

struct MedianWidth {};

/// Gaussian kernel k(x, x') = exp(-w^2 ||x - x'||^2). With MedianWidth the
/// scale is w = 1/m where m is the median pairwise distance, which puts the
/// similarity at the median distance at exp(-1).
inline KernelMatrix gaussian_kernel(const Matrix& X, double width) {
    if (X.rows() < 2) throw DimensionError("gaussian_kernel: need n >= 2 samples");
    if (!(width > 0.0)) throw ConfigError("gaussian_kernel: width must be positive");
    const Index n = X.rows();
    const Vector sq_norms = X.rowwise().squaredNorm();
    Matrix D2 = sq_norms.replicate(1, n) + sq_norms.transpose().replicate(n, 1) -
                2.0 * (X * X.transpose());
    D2 = D2.cwiseMax(0.0);
    const double w2 = width * width;
    Matrix K = (-w2 * D2.array()).exp();
    K.diagonal().setOnes();
    K = 0.5 * (K + K.transpose());
    return KernelMatrix{std::move(K), false};
}

inline KernelMatrix gaussian_kernel(const Matrix& X, MedianWidth) {
    const double m = median_pairwise_distance(X);
    if (m <= 0.0) throw NumericalError("gaussian_kernel: degenerate median bandwidth (all points identical)");
    return gaussian_kernel(X, 1.0 / m);
}

/// Empirical HSIC: tr(K H L H), evaluated as the elementwise product of K
/// with the double-centered L. Divided by (n-1)^2 when normalized.
inline double hsic(const KernelMatrix& K, const KernelMatrix& L, bool normalized = false) {
    if (K.size() != L.size())
        throw DimensionError("hsic: kernel sizes differ (" + std::to_string(K.size()) + " vs " +
                             std::to_string(L.size()) + ")");
    const Index n = K.size();
    if (n < 2) throw DimensionError("hsic: need n >= 2 samples");
    double value = 0.0;
    if (L.centered) {
        value = (K.values.array() * L.values.array()).sum();
    } else if (K.centered) {
        value = (K.values.array() * L.values.array()).sum();
    } else {
        value = (K.values.array() * centered_values(L.values).array()).sum();
    }
    if (normalized) value /= static_cast<double>((n - 1) * (n - 1));
    return value;
}

/// Unnormalized linear-kernel HSIC between two score matrices:
/// tr(K_u H K_v H) = ||Zu^T H Zv||_F^2.
inline double linear_hsic(const Matrix& Zu, const Matrix& Zv) {
    if (Zu.rows() != Zv.rows()) throw DimensionError("linear_hsic: row counts differ");
    const Matrix Zu_c = Zu.rowwise() - Zu.colwise().mean();
    const Matrix Zv_c = Zv.rowwise() - Zv.colwise().mean();
    return (Zu_c.transpose() * Zv_c).squaredNorm();
}

}  // namespace sispca::kernels
