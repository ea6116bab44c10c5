#pragma once

#include "sispca/kernels.hpp"
#include "sispca/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace sispca::metrics {

/// Column-orthonormal basis of the span of the centered scores (thin QR).
/// Subspace geometry is measured in this n-space, matching the convention
/// that distances are taken between score representations.
inline Matrix score_basis(const Matrix& Z) {
    const Matrix Zc = Z.rowwise() - Z.colwise().mean();
    Eigen::HouseholderQR<Matrix> qr(Zc);
    Matrix Q = qr.householderQ() * Matrix::Identity(Zc.rows(), Zc.cols());
    return Q;
}

/// Principal angles between two column-orthonormal bases, ascending.
/// theta_i = arccos(sigma_i) with singular values clamped into [0, 1].
inline std::vector<double> principal_angles(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows())
        throw DimensionError("principal_angles: ambient dimensions differ (" +
                             std::to_string(A.rows()) + " vs " + std::to_string(B.rows()) + ")");
    Eigen::JacobiSVD<Matrix> svd(A.transpose() * B);
    const Vector sv = svd.singularValues();
    std::vector<double> angles(static_cast<std::size_t>(sv.size()));
    for (Index i = 0; i < sv.size(); ++i)
        angles[static_cast<std::size_t>(i)] = std::acos(std::clamp(sv(i), 0.0, 1.0));
    std::sort(angles.begin(), angles.end());
    return angles;
}

/// Geodesic Grassmann distance (sum of squared principal angles)^(1/2).
inline double grassmann_geodesic(const Matrix& A, const Matrix& B) {
    double total = 0.0;
    for (double theta : principal_angles(A, B)) total += theta * theta;
    return std::sqrt(total);
}

/// Fubini-Study affinity: product of the cosines of the principal angles
/// between the bases truncated to their leading k_trunc columns.
inline double fubini_study_affinity(const Matrix& A, const Matrix& B, Index k_trunc) {
    if (k_trunc < 1) throw ConfigError("fubini_study_affinity: k_trunc must be >= 1");
    const Index ka = std::min(k_trunc, A.cols());
    const Index kb = std::min(k_trunc, B.cols());
    Eigen::JacobiSVD<Matrix> svd(A.leftCols(ka).transpose() * B.leftCols(kb));
    double product = 1.0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
        product *= std::clamp(svd.singularValues()(i), 0.0, 1.0);
    return product;
}

/// Mean silhouette over samples with Euclidean distances. Clusters come from
/// the labels as given; singleton clusters contribute s(i) = 0.
inline double silhouette(const Matrix& points, const std::vector<std::string>& labels) {
    const Index n = points.rows();
    if (static_cast<Index>(labels.size()) != n)
        throw DimensionError("silhouette: label count does not match row count");
    std::map<std::string, std::vector<Index>> clusters;
    for (Index i = 0; i < n; ++i) clusters[labels[static_cast<std::size_t>(i)]].push_back(i);
    if (clusters.size() < 2)
        throw ConfigError("silhouette: undefined for a single cluster");

    std::vector<const std::vector<Index>*> groups;
    std::vector<int> group_of(static_cast<std::size_t>(n));
    int g = 0;
    for (const auto& [key, members] : clusters) {
        groups.push_back(&members);
        for (Index i : members) group_of[static_cast<std::size_t>(i)] = g;
        ++g;
    }

    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const int own = group_of[static_cast<std::size_t>(i)];
        if (groups[static_cast<std::size_t>(own)]->size() == 1) continue;  // s(i) = 0
        double a = 0.0;
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < groups.size(); ++k) {
            double sum = 0.0;
            for (Index j : *groups[k]) {
                if (j == i) continue;
                sum += (points.row(i) - points.row(j)).norm();
            }
            if (static_cast<int>(k) == own) {
                a = sum / static_cast<double>(groups[k]->size() - 1);
            } else {
                b = std::min(b, sum / static_cast<double>(groups[k]->size()));
            }
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

namespace detail {

/// Average ranks (ties get the mean of their rank range).
inline Vector average_ranks(const Vector& x) {
    const Index n = x.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a) < x(b); });
    Vector ranks(n);
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j + 1 < n && x(order[static_cast<std::size_t>(j + 1)]) ==
                                x(order[static_cast<std::size_t>(i)]))
            ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index k = i; k <= j; ++k) ranks(order[static_cast<std::size_t>(k)]) = rank;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const Vector& a, const Vector& b) {
    const Vector ac = a.array() - a.mean();
    const Vector bc = b.array() - b.mean();
    const double denom = ac.norm() * bc.norm();
    if (denom <= 0.0) return 0.0;
    return ac.dot(bc) / denom;
}

}  // namespace detail

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
    return detail::pearson(detail::average_ranks(a), detail::average_ranks(b));
}

/// Maximum over columns of |Spearman rho(column, y)|. Constant columns
/// contribute 0 with a warning.
inline double max_abs_spearman(const Matrix& Z, const Vector& y) {
    if (Z.rows() != y.size()) throw DimensionError("max_abs_spearman: row count mismatch");
    if (Z.cols() < 1) throw DimensionError("max_abs_spearman: need at least one column");
    double best = 0.0;
    for (Index c = 0; c < Z.cols(); ++c) {
        const Vector col = Z.col(c);
        if ((col.array() == col(0)).all()) {
            warn("max_abs_spearman: column " + std::to_string(c) + " is constant, contributes 0");
            continue;
        }
        best = std::max(best, std::abs(spearman(col, y)));
    }
    return best;
}

struct PairHsic {
    std::size_t i = 0;
    std::size_t j = 0;
    double hsic_linear = 0.0;    // unnormalized, linear kernels on scores
    double hsic_gaussian = 0.0;  // normalized, per-subspace median bandwidth
};

/// Pairwise dependence report between all fitted subspaces.
inline std::vector<PairHsic> subspace_hsic_report(const model::FittedModel& model) {
    const std::size_t m = model.subspaces.size();
    std::vector<PairHsic> report;
    if (m < 2) return report;
    std::vector<kernels::KernelMatrix> gauss(m);
    for (std::size_t j = 0; j < m; ++j)
        gauss[j] = kernels::gaussian_kernel(model.subspaces[j].Z, kernels::MedianWidth{});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            PairHsic entry;
            entry.i = i;
            entry.j = j;
            entry.hsic_linear =
                kernels::linear_hsic(model.subspaces[i].Z, model.subspaces[j].Z);
            entry.hsic_gaussian = kernels::hsic(gauss[i], gauss[j], true);
            report.push_back(entry);
        }
    }
    return report;
}

/// Circular correlation (Fisher-Lee) between two angle samples.
inline double circular_correlation(const Vector& alpha, const Vector& beta) {
    if (alpha.size() != beta.size()) throw DimensionError("circular_correlation: length mismatch");
    const double am = std::atan2(alpha.array().sin().sum(), alpha.array().cos().sum());
    const double bm = std::atan2(beta.array().sin().sum(), beta.array().cos().sum());
    const Eigen::ArrayXd sa = (alpha.array() - am).sin();
    const Eigen::ArrayXd sb = (beta.array() - bm).sin();
    const double denom = std::sqrt(sa.square().sum() * sb.square().sum());
    if (denom <= 0.0) return 0.0;
    return (sa * sb).sum() / denom;
}

/// R^2 of the best orthogonal-plus-scale (Procrustes) fit of A onto B after
/// centering both.
inline double procrustes_r2(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) throw DimensionError("procrustes_r2: row count mismatch");
    const Matrix Ac = A.rowwise() - A.colwise().mean();
    const Matrix Bc = B.rowwise() - B.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(Ac.transpose() * Bc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix Q = svd.matrixU() * svd.matrixV().transpose();
    const double scale = svd.singularValues().sum() / Ac.squaredNorm();
    const double resid = (Bc - scale * (Ac * Q)).squaredNorm();
    return 1.0 - resid / Bc.squaredNorm();
}

}  // namespace sispca::metrics
