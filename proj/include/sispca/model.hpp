#pragma once

#include "sispca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sispca::model {

using kernels::KernelMatrix;
using kernels::SupervisionTarget;

/// Observation matrix with its preprocessing state. `values` is the matrix
/// the solvers see: always column-centered, optionally unit-variance scaled.
struct DataMatrix {
    Matrix values;
    Vector column_means;
    Vector column_scales;  // all ones unless scaled
    bool scaled = false;

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }

    static DataMatrix standardize(const Matrix& raw, bool scale = false) {
        DataMatrix out;
        out.column_means = raw.colwise().mean();
        out.values = raw.rowwise() - out.column_means.transpose();
        out.column_scales = Vector::Ones(raw.cols());
        out.scaled = scale;
        if (scale) {
            for (Index c = 0; c < raw.cols(); ++c) {
                const double sd = std::sqrt(out.values.col(c).squaredNorm() /
                                            static_cast<double>(raw.rows()));
                if (sd <= 1e-300) {
                    warn("standardize: column " + std::to_string(c) +
                         " is constant; leaving it unscaled");
                    continue;
                }
                out.column_scales(c) = sd;
                out.values.col(c) /= sd;
            }
        }
        return out;
    }

    /// Applies the stored preprocessing to new rows.
    Matrix apply(const Matrix& raw) const {
        if (raw.cols() != values.cols())
            throw DimensionError("DataMatrix::apply: expected " + std::to_string(values.cols()) +
                                 " columns, got " + std::to_string(raw.cols()));
        Matrix out = raw.rowwise() - column_means.transpose();
        if (scaled) out.array().rowwise() /= column_scales.transpose().array();
        return out;
    }
};

/// Latent-space kernel choice for a subspace. Algorithm 1 requires linear;
/// Algorithm 2 accepts a Gaussian kernel with an explicit or median width.
struct LatentKernel {
    enum class Kind { Linear, Gaussian };
    Kind kind = Kind::Linear;
    std::optional<double> width;  // Gaussian only; empty means median heuristic

    static LatentKernel linear() { return {}; }
    static LatentKernel gaussian() { return {Kind::Gaussian, std::nullopt}; }
    static LatentKernel gaussian_width(double w) { return {Kind::Gaussian, w}; }

    bool is_linear() const { return kind == Kind::Linear; }
};

struct SubspaceSpec {
    std::string name;
    Index dim = 1;
    SupervisionTarget target = SupervisionTarget::identity();
    LatentKernel latent_kernel = LatentKernel::linear();
};

struct SubspaceResult {
    Matrix U;                   // p x d loadings, orthonormal columns
    Matrix Z;                   // n x d scores, Z = X U
    Vector explained_variance;  // eigenvalues, non-increasing
};

enum class Algorithm { Linear, General };
enum class InitOrdering { Auto, Fixed };

struct FitConfig {
    double lambda = 0.0;
    int max_iter = 100;
    double rel_tol = 1e-7;
    Algorithm algorithm = Algorithm::Linear;
    InitOrdering init_ordering = InitOrdering::Auto;
    std::uint64_t seed = 0;
    double learning_rate = 1e-2;  // Algorithm 2 only

    void validate() const {
        if (!std::isfinite(lambda) || lambda < 0.0)
            throw ConfigError("FitConfig: lambda must be finite and >= 0");
        if (max_iter < 1) throw ConfigError("FitConfig: max_iter must be positive");
        if (!(rel_tol > 0.0) || rel_tol >= 1.0)
            throw ConfigError("FitConfig: rel_tol must lie in (0, 1)");
        if (!(learning_rate > 0.0)) throw ConfigError("FitConfig: learning_rate must be positive");
    }
};

struct FittedModel {
    std::vector<SubspaceResult> subspaces;
    std::vector<SubspaceSpec> specs;
    std::vector<double> objective_trace;
    std::vector<Index> update_order;
    FitConfig config;
    Index n = 0;
    Index p = 0;
    Vector column_means;
    Vector column_scales;
    bool scaled = false;
    bool converged = false;
};

namespace detail {

/// Largest-|entry| coordinate of each column made positive (first index on
/// ties), so eigenvector signs are deterministic.
inline void fix_signs(Matrix& U) {
    for (Index c = 0; c < U.cols(); ++c) {
        Index arg = 0;
        double best = -1.0;
        for (Index r = 0; r < U.rows(); ++r) {
            const double a = std::abs(U(r, c));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (U(arg, c) < 0.0) U.col(c) = -U.col(c);
    }
}

/// Top-d eigenpairs of a symmetric p x p matrix, eigenvalues descending.
inline std::pair<Matrix, Vector> top_eigen(const Matrix& M_sym, Index d) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(M_sym);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigen_update: eigensolver failed; matrix norm " +
                             std::to_string(M_sym.norm()));
    const Index p = M_sym.rows();
    Matrix U(p, d);
    Vector evals(d);
    for (Index k = 0; k < d; ++k) {
        U.col(k) = solver.eigenvectors().col(p - 1 - k);
        evals(k) = solver.eigenvalues()(p - 1 - k);
    }
    fix_signs(U);
    return {std::move(U), std::move(evals)};
}

/// Factored supervision statistic S = X^T H K_Y H X. With column-centered X
/// the sandwich H is absorbed, so S reduces to X^T K_Y X, and the target
/// kernels factor as K_Y = F F^T (one-hot labels, centered Y) or identity.
inline Matrix supervision_statistic(const Matrix& X, const SupervisionTarget& target) {
    if (target.is_identity()) return X.transpose() * X;
    if (target.is_categorical()) {
        const auto& labels = std::get<SupervisionTarget::Categorical>(target.kind).labels;
        if (static_cast<Index>(labels.size()) != X.rows())
            throw DimensionError("fit: target '" + target.name + "' has " +
                                 std::to_string(labels.size()) + " labels for " +
                                 std::to_string(X.rows()) + " rows");
        std::vector<std::string> distinct(labels);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2)
            throw ConfigError("fit: categorical target '" + target.name +
                              "' needs at least 2 distinct labels");
        Matrix F = Matrix::Zero(X.rows(), static_cast<Index>(distinct.size()));
        for (Index i = 0; i < X.rows(); ++i) {
            const auto it = std::lower_bound(distinct.begin(), distinct.end(), labels[i]);
            F(i, static_cast<Index>(it - distinct.begin())) = 1.0;
        }
        const Matrix B = X.transpose() * F;
        return B * B.transpose();
    }
    const Matrix& Y = std::get<SupervisionTarget::Continuous>(target.kind).values;
    if (Y.rows() != X.rows())
        throw DimensionError("fit: target '" + target.name + "' has " + std::to_string(Y.rows()) +
                             " rows for " + std::to_string(X.rows()) + " data rows");
    const Matrix Yc = kernels::center_columns(Y, target.name);
    const Matrix B = X.transpose() * Yc;
    return B * B.transpose();
}

/// Centered target kernel H K_Y H, materialized n x n (Algorithm 2 path).
inline Matrix centered_target_kernel(const Matrix& X, const SupervisionTarget& target) {
    const Index n = X.rows();
    if (target.is_identity()) {
        Matrix H = Matrix::Identity(n, n);
        H.array() -= 1.0 / static_cast<double>(n);
        return H;  // H I H = H
    }
    const KernelMatrix K =
        target.is_categorical() ? kernels::delta_kernel(target) : kernels::linear_kernel(target);
    if (K.size() != n) throw DimensionError("fit: target '" + target.name + "' size mismatch");
    return kernels::centered_values(K.values);
}

inline void validate_specs(const DataMatrix& X, const std::vector<SubspaceSpec>& specs) {
    if (specs.empty()) throw ConfigError("fit: at least one subspace spec is required");
    for (const auto& spec : specs) {
        if (spec.dim < 1) throw ConfigError("fit: subspace '" + spec.name + "' has dim < 1");
        if (spec.dim > X.cols())
            throw ConfigError("fit: subspace '" + spec.name + "' dim " + std::to_string(spec.dim) +
                              " exceeds feature count " + std::to_string(X.cols()));
        const Index tn = spec.target.sample_count();
        if (tn >= 0 && tn != X.rows())
            throw DimensionError("fit: target '" + spec.target.name + "' has " +
                                 std::to_string(tn) + " samples for " + std::to_string(X.rows()) +
                                 " rows");
    }
}

inline void warn_collapsed_axes(const std::string& name, const Vector& evals) {
    if (evals.size() == 0) return;
    const double top = evals(0);
    if (top <= 0.0) return;
    Index collapsed = 0;
    for (Index k = 0; k < evals.size(); ++k)
        if (evals(k) <= 1e-8 * top) ++collapsed;
    if (collapsed > 0)
        warn("subspace '" + name + "': " + std::to_string(collapsed) +
             " axis/axes beyond the effective dimension carry near-zero variance");
}

}  // namespace detail

/// Objective value split into its two terms:
/// value = supervision - lambda * disentanglement.
struct ObjectiveValue {
    double supervision = 0.0;
    double disentanglement = 0.0;
    double value = 0.0;
};

/// Eq.-style objective: sum_j tr(K_{Z_j} H K_{Y_j} H) minus lambda times the
/// pairwise tr(K_{Z_i} H K_{Z_j} H) over unordered subspace pairs, with
/// linear latent kernels K_Z = Z Z^T.
inline ObjectiveValue objective(const Matrix& X, const std::vector<SubspaceResult>& subspaces,
                                const std::vector<SubspaceSpec>& specs, double lambda) {
    if (subspaces.size() != specs.size())
        throw DimensionError("objective: subspace/spec count mismatch");
    const Index n = X.rows();
    ObjectiveValue out;
    for (std::size_t j = 0; j < subspaces.size(); ++j) {
        const Matrix& Z = subspaces[j].Z;
        if (Z.rows() != n) throw DimensionError("objective: score row count mismatch");
        const KernelMatrix KZ{Z * Z.transpose(), false};
        const SupervisionTarget& t = specs[j].target;
        KernelMatrix KY;
        if (t.is_identity())
            KY = KernelMatrix{Matrix::Identity(n, n), false};
        else if (t.is_categorical())
            KY = kernels::delta_kernel(t);
        else
            KY = kernels::linear_kernel(t);
        out.supervision += kernels::hsic(KZ, KY, false);
    }
    for (std::size_t i = 0; i < subspaces.size(); ++i)
        for (std::size_t j = i + 1; j < subspaces.size(); ++j)
            out.disentanglement += kernels::linear_hsic(subspaces[i].Z, subspaces[j].Z);
    out.value = out.supervision - lambda * out.disentanglement;
    return out;
}

/// One analytical subspace update: U = top-d eigenvectors of the symmetrized
/// X^T K_tilde X, with K_tilde already assembled (and centered) by the caller.
inline SubspaceResult eigen_update(const Matrix& X, const KernelMatrix& K_tilde, Index d) {
    if (K_tilde.size() != X.rows()) throw DimensionError("eigen_update: kernel/data size mismatch");
    if (d > X.cols()) throw ConfigError("eigen_update: d exceeds feature count");
    Matrix M = X.transpose() * (K_tilde.values * X);
    M = 0.5 * (M + M.transpose());
    auto [U, evals] = detail::top_eigen(M, d);
    SubspaceResult out;
    out.Z = X * U;
    out.U = std::move(U);
    out.explained_variance = std::move(evals);
    return out;
}

/// Update order by supervision strength: each subspace's pre-disentanglement
/// sPCA solution is scored by unnormalized HSIC(Z0, Y), strongest first, ties
/// in declaration order.
inline std::vector<Index> init_order(const DataMatrix& X, const std::vector<SubspaceSpec>& specs) {
    detail::validate_specs(X, specs);
    const std::size_t m = specs.size();
    std::vector<double> strength(m);
    for (std::size_t j = 0; j < m; ++j) {
        const Matrix S = detail::supervision_statistic(X.values, specs[j].target);
        auto [U0, evals] = detail::top_eigen(0.5 * (S + S.transpose()), specs[j].dim);
        strength[j] = evals.sum();  // = tr(U0^T S U0) = HSIC(Z0, Y)
    }
    std::vector<Index> order(m);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return strength[a] > strength[b]; });
    return order;
}

/// sisPCA-linear via alternating eigendecomposition. Per update the residual
/// target kernel is K_Y - lambda * sum of the other latent kernels, so each
/// step exactly maximizes the objective's conditional slice and the trace is
/// non-decreasing. Latent kernels enter through factored n x d scores only.
inline FittedModel fit_linear(const DataMatrix& X, const std::vector<SubspaceSpec>& specs,
                              const FitConfig& config) {
    config.validate();
    detail::validate_specs(X, specs);
    for (const auto& spec : specs)
        if (!spec.latent_kernel.is_linear())
            throw ConfigError("fit_linear: subspace '" + spec.name +
                              "' requests a non-linear latent kernel; use fit_general");
    const Index p = X.cols();
    const std::size_t m = specs.size();
    const double lambda = config.lambda;

    std::vector<Matrix> S(m);
    for (std::size_t j = 0; j < m; ++j) {
        S[j] = detail::supervision_statistic(X.values, specs[j].target);
        S[j] = 0.5 * (S[j] + S[j].transpose());
    }

    FittedModel model;
    model.specs = specs;
    model.config = config;
    model.n = X.rows();
    model.p = p;
    model.column_means = X.column_means;
    model.column_scales = X.column_scales;
    model.scaled = X.scaled;
    model.subspaces.resize(m);

    std::vector<Index> order(m);
    std::iota(order.begin(), order.end(), Index{0});
    if (config.init_ordering == InitOrdering::Auto) {
        // The ordering cycle doubles as a warm start: it already solved each
        // subspace's standalone sPCA problem.
        std::vector<double> strength(m);
        for (std::size_t j = 0; j < m; ++j) {
            auto [U0, evals] = detail::top_eigen(S[j], specs[j].dim);
            model.subspaces[j].U = std::move(U0);
            model.subspaces[j].Z = X.values * model.subspaces[j].U;
            model.subspaces[j].explained_variance = evals;
            strength[j] = evals.sum();
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return strength[a] > strength[b]; });
    } else {
        Rng rng(config.seed);
        for (std::size_t j = 0; j < m; ++j) {
            Matrix A = rng.normal_matrix(p, specs[j].dim);
            Eigen::HouseholderQR<Matrix> qr(A);
            model.subspaces[j].U = qr.householderQ() * Matrix::Identity(p, specs[j].dim);
            detail::fix_signs(model.subspaces[j].U);
            model.subspaces[j].Z = X.values * model.subspaces[j].U;
            model.subspaces[j].explained_variance = Vector::Zero(specs[j].dim);
        }
    }
    model.update_order = order;

    const auto fast_objective = [&]() {
        double sup = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            sup += (model.subspaces[j].U.transpose() * S[j] * model.subspaces[j].U).trace();
        double dis = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                dis += (model.subspaces[i].Z.transpose() * model.subspaces[j].Z).squaredNorm();
        return sup - lambda * dis;
    };

    model.objective_trace.push_back(fast_objective());
    for (int sweep = 0; sweep < config.max_iter; ++sweep) {
        for (Index j : order) {
            Matrix M = S[static_cast<std::size_t>(j)];
            if (lambda > 0.0 && m > 1) {
                for (std::size_t i = 0; i < m; ++i) {
                    if (static_cast<Index>(i) == j) continue;
                    const Matrix A = X.values.transpose() * model.subspaces[i].Z;
                    M.noalias() -= lambda * (A * A.transpose());
                }
            }
            M = 0.5 * (M + M.transpose());
            auto [U, evals] = detail::top_eigen(M, specs[static_cast<std::size_t>(j)].dim);
            auto& sub = model.subspaces[static_cast<std::size_t>(j)];
            sub.U = std::move(U);
            sub.Z = X.values * sub.U;
            sub.explained_variance = std::move(evals);
        }
        const double prev = model.objective_trace.back();
        const double cur = fast_objective();
        model.objective_trace.push_back(cur);
        if (std::abs(cur - prev) < config.rel_tol * std::max(1.0, std::abs(prev))) {
            model.converged = true;
            break;
        }
    }
    for (std::size_t j = 0; j < m; ++j)
        detail::warn_collapsed_axes(specs[j].name, model.subspaces[j].explained_variance);
    return model;
}

// ---------------------------------------------------------------------------
// sisPCA-general (Algorithm 2): gradient descent on all projections jointly.
// ---------------------------------------------------------------------------

/// Per-subspace latent kernel with a frozen Gaussian width (resolved once at
/// fit start so the loss stays a fixed function of the projections).
inline Matrix latent_kernel_values(const Matrix& Z, const LatentKernel& lk, double width) {
    if (lk.is_linear()) return Z * Z.transpose();
    return kernels::gaussian_kernel(Z, width).values;
}

/// Loss of the general problem:
/// L = -sum_j tr(K_{Z_j} H K_{Y_j} H) + lambda sum_{i>j} tr(K_{Z_i} H K_{Z_j} H).
inline double general_loss(const Matrix& X, const std::vector<Matrix>& Us,
                           const std::vector<SubspaceSpec>& specs,
                           const std::vector<Matrix>& centered_KY, double lambda,
                           const std::vector<double>& widths) {
    const std::size_t m = Us.size();
    std::vector<Matrix> K(m);
    for (std::size_t j = 0; j < m; ++j)
        K[j] = latent_kernel_values(X * Us[j], specs[j].latent_kernel, widths[j]);
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        loss -= (K[j].array() * centered_KY[j].array()).sum();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            loss += lambda * (K[i].array() * kernels::centered_values(K[j]).array()).sum();
    return loss;
}

/// Analytic gradient of general_loss with respect to every U_j.
inline std::vector<Matrix> general_gradient(const Matrix& X, const std::vector<Matrix>& Us,
                                            const std::vector<SubspaceSpec>& specs,
                                            const std::vector<Matrix>& centered_KY, double lambda,
                                            const std::vector<double>& widths) {
    const std::size_t m = Us.size();
    std::vector<Matrix> Z(m), K(m);
    for (std::size_t j = 0; j < m; ++j) {
        Z[j] = X * Us[j];
        K[j] = latent_kernel_values(Z[j], specs[j].latent_kernel, widths[j]);
    }
    std::vector<Matrix> grads(m);
    for (std::size_t j = 0; j < m; ++j) {
        // dL/dK_j = -H K_Y H + lambda * sum_{i != j} H K_i H
        Matrix G = -centered_KY[j];
        for (std::size_t i = 0; i < m; ++i) {
            if (i == j) continue;
            G.noalias() += lambda * kernels::centered_values(K[i]);
        }
        Matrix dZ;
        if (specs[j].latent_kernel.is_linear()) {
            dZ = 2.0 * (G * Z[j]);
        } else {
            const double w2 = widths[j] * widths[j];
            Matrix M = G.cwiseProduct(K[j]);
            const Vector row_sums = M.rowwise().sum();
            dZ = -4.0 * w2 * (row_sums.asDiagonal() * Z[j] - M * Z[j]);
        }
        grads[j] = X.transpose() * dZ;
    }
    return grads;
}

namespace detail {

/// Nearest orthonormal frame: the polar factor of U from its SVD.
inline Matrix polar_orthonormalize(const Matrix& U) {
    Eigen::JacobiSVD<Matrix> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Gaussian widths for every subspace, resolved from the given scores.
inline std::vector<double> resolve_latent_widths(const std::vector<Matrix>& Zs,
                                                 const std::vector<SubspaceSpec>& specs) {
    std::vector<double> widths(specs.size(), 0.0);
    for (std::size_t j = 0; j < specs.size(); ++j) {
        if (specs[j].latent_kernel.is_linear()) continue;
        if (specs[j].latent_kernel.width) {
            widths[j] = *specs[j].latent_kernel.width;
            if (!(widths[j] > 0.0))
                throw ConfigError("fit_general: subspace '" + specs[j].name +
                                  "' has non-positive kernel width");
        } else {
            const double med = kernels::median_pairwise_distance(Zs[j]);
            if (med <= 0.0)
                throw NumericalError("fit_general: degenerate median bandwidth for subspace '" +
                                     specs[j].name + "'");
            widths[j] = 1.0 / med;
        }
    }
    return widths;
}

/// sisPCA-general: full-batch gradient descent on all U_j jointly with
/// re-orthonormalization after every step. Convergence is not guaranteed;
/// the returned flag records whether the stopping tolerance was met.
inline FittedModel fit_general(const DataMatrix& X, const std::vector<SubspaceSpec>& specs,
                               const FitConfig& config) {
    config.validate();
    detail::validate_specs(X, specs);
    if (std::none_of(specs.begin(), specs.end(),
                     [](const SubspaceSpec& s) { return !s.latent_kernel.is_linear(); }))
        throw ConfigError("fit_general: no subspace uses a gaussian latent kernel; use fit_linear");

    const Index p = X.cols();
    const std::size_t m = specs.size();

    std::vector<Matrix> centered_KY(m);
    for (std::size_t j = 0; j < m; ++j)
        centered_KY[j] = detail::centered_target_kernel(X.values, specs[j].target);

    FittedModel model;
    model.specs = specs;
    model.config = config;
    model.n = X.rows();
    model.p = p;
    model.column_means = X.column_means;
    model.column_scales = X.column_scales;
    model.scaled = X.scaled;
    model.subspaces.resize(m);
    model.update_order.resize(m);
    std::iota(model.update_order.begin(), model.update_order.end(), Index{0});

    Rng rng(config.seed);
    std::vector<Matrix> Us(m), Zs(m);
    for (std::size_t j = 0; j < m; ++j) {
        Us[j] = detail::polar_orthonormalize(rng.normal_matrix(p, specs[j].dim));
        Zs[j] = X.values * Us[j];
    }
    const std::vector<double> widths = resolve_latent_widths(Zs, specs);

    double loss = general_loss(X.values, Us, specs, centered_KY, config.lambda, widths);
    model.objective_trace.push_back(loss);
    for (int it = 0; it < config.max_iter; ++it) {
        const auto grads =
            general_gradient(X.values, Us, specs, centered_KY, config.lambda, widths);
        for (std::size_t j = 0; j < m; ++j)
            Us[j] = detail::polar_orthonormalize(Us[j] - config.learning_rate * grads[j]);
        const double next = general_loss(X.values, Us, specs, centered_KY, config.lambda, widths);
        if (!std::isfinite(next))
            throw NumericalError("fit_general: loss diverged; reduce learning_rate");
        model.objective_trace.push_back(next);
        const double denom = std::max(std::abs(loss), 1e-300);
        const bool done = std::abs(next - loss) / denom < config.rel_tol;
        loss = next;
        if (done) {
            model.converged = true;
            break;
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        auto& sub = model.subspaces[j];
        Matrix Z = X.values * Us[j];
        // Axes ordered by captured variance, matching the analytic path.
        const Vector var = Z.colwise().squaredNorm().transpose();
        std::vector<Index> perm(static_cast<std::size_t>(var.size()));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::stable_sort(perm.begin(), perm.end(),
                         [&](Index a, Index b) { return var(a) > var(b); });
        Matrix U_sorted(p, var.size());
        Vector var_sorted(var.size());
        for (Index c = 0; c < var.size(); ++c) {
            U_sorted.col(c) = Us[j].col(perm[static_cast<std::size_t>(c)]);
            var_sorted(c) = var(perm[static_cast<std::size_t>(c)]);
        }
        detail::fix_signs(U_sorted);
        sub.U = std::move(U_sorted);
        sub.Z = X.values * sub.U;
        sub.explained_variance = std::move(var_sorted);
    }
    return model;
}

}  // namespace sispca::model

namespace sispca::model {

/// Scores of new observations under the stored preprocessing, one matrix per
/// subspace.
inline std::vector<Matrix> transform(const FittedModel& model, const Matrix& X_new_raw) {
    if (X_new_raw.cols() != model.p)
        throw DimensionError("transform: expected " + std::to_string(model.p) + " columns, got " +
                             std::to_string(X_new_raw.cols()));
    Matrix Xc = X_new_raw.rowwise() - model.column_means.transpose();
    if (model.scaled) Xc.array().rowwise() /= model.column_scales.transpose().array();
    std::vector<Matrix> out;
    out.reserve(model.subspaces.size());
    for (const auto& sub : model.subspaces) out.push_back(Xc * sub.U);
    return out;
}

struct RankedFeature {
    Index feature = 0;
    double loading = 0.0;
};

/// Features ranked by |loading| on one component, signed values kept.
inline std::vector<RankedFeature> top_features(const SubspaceResult& result, Index component,
                                               Index k) {
    if (component < 0 || component >= result.U.cols())
        throw IndexError("top_features: component " + std::to_string(component) +
                         " out of range for dim " + std::to_string(result.U.cols()));
    const Index p = result.U.rows();
    std::vector<RankedFeature> ranked(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) ranked[static_cast<std::size_t>(i)] = {i, result.U(i, component)};
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedFeature& a, const RankedFeature& b) {
        return std::abs(a.loading) > std::abs(b.loading);
    });
    if (k < p) ranked.resize(static_cast<std::size_t>(std::max<Index>(k, 0)));
    return ranked;
}

}  // namespace sispca::model
