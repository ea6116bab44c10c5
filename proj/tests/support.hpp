#pragma once

// Test-only oracles. Everything here deliberately materializes the centering
// matrix H and uses dense brute-force linear algebra, independent of the
// implementation paths under test.

#include "sispca/common.hpp"

#include <vector>

namespace oracle {

using sispca::Index;
using sispca::Matrix;
using sispca::Vector;

inline Matrix explicit_H(Index n) {
    return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
}

inline double hsic_explicit(const Matrix& K, const Matrix& L, bool normalized) {
    const Index n = K.rows();
    const Matrix H = explicit_H(n);
    double value = (K * H * L * H).trace();
    if (normalized) value /= static_cast<double>((n - 1) * (n - 1));
    return value;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    sispca::Rng rng(seed);
    return rng.normal_matrix(rows, cols);
}

inline Matrix random_psd(Index n, std::uint64_t seed) {
    const Matrix A = random_matrix(n, n, seed);
    return A * A.transpose();
}

inline Matrix random_orthonormal(Index rows, Index cols, std::uint64_t seed) {
    const Matrix A = random_matrix(rows, cols, seed);
    Eigen::HouseholderQR<Matrix> qr(A);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// Top-d eigenvectors of X^T H K H X with H materialized; full dense solve.
inline std::pair<Matrix, Vector> dense_supervised_pca(const Matrix& X, const Matrix& K, Index d) {
    const Matrix H = explicit_H(X.rows());
    Matrix M = X.transpose() * H * K * H * X;
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(M);
    const Index p = X.cols();
    Matrix U(p, d);
    Vector evals(d);
    for (Index k = 0; k < d; ++k) {
        U.col(k) = solver.eigenvectors().col(p - 1 - k);
        evals(k) = solver.eigenvalues()(p - 1 - k);
    }
    return {U, evals};
}

/// Largest principal angle between the spans of two orthonormal bases.
inline double max_principal_angle(const Matrix& A, const Matrix& B) {
    Eigen::JacobiSVD<Matrix> svd(A.transpose() * B);
    double smallest_cos = 1.0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
        smallest_cos = std::min(smallest_cos, svd.singularValues()(i));
    return std::acos(std::clamp(smallest_cos, 0.0, 1.0));
}

inline Matrix column_centered(const Matrix& A) {
    return A.rowwise() - A.colwise().mean();
}

}  // namespace oracle
