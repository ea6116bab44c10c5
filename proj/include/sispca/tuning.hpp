#pragma once

#include "sispca/metrics.hpp"
#include "sispca/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sispca::tuning {

/// Ascending grid of disentanglement strengths. The default is 0 plus a
/// 19-point geometric ladder from 1e-2 to 1e2, 20 values total.
struct LambdaGrid {
    std::vector<double> values;

    static LambdaGrid default_grid() {
        LambdaGrid grid;
        grid.values.push_back(0.0);
        const int count = 19;
        const double lo = 1e-2, hi = 1e2;
        for (int i = 0; i < count; ++i) {
            const double t = static_cast<double>(i) / (count - 1);
            grid.values.push_back(lo * std::pow(hi / lo, t));
        }
        return grid;
    }

    void validate() const {
        if (values.empty()) throw ConfigError("LambdaGrid: grid is empty");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
                throw ConfigError("LambdaGrid: values must be finite and >= 0");
            if (i > 0 && values[i] <= values[i - 1])
                throw ConfigError("LambdaGrid: values must be strictly increasing");
        }
    }
};

/// Symmetric model-affinity matrix over a lambda grid, unit diagonal.
struct AffinityMatrix {
    Matrix values;
    std::vector<double> lambdas;
};

/// Rank of a supervision kernel, used for affinity truncation:
/// number of distinct labels (delta), numerical rank of the centered target
/// (linear), or n for the identity kernel.
inline Index target_kernel_rank(const kernels::SupervisionTarget& target, Index n) {
    if (target.is_identity()) return n;
    if (target.is_categorical()) {
        const auto& labels =
            std::get<kernels::SupervisionTarget::Categorical>(target.kind).labels;
        std::vector<std::string> distinct(labels);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        return static_cast<Index>(distinct.size());
    }
    const Matrix Yc = kernels::center_columns(
        std::get<kernels::SupervisionTarget::Continuous>(target.kind).values);
    Eigen::JacobiSVD<Matrix> svd(Yc);
    const double tol = 1e-10 * std::max(1.0, svd.singularValues().size() > 0
                                                 ? svd.singularValues()(0)
                                                 : 0.0);
    Index rank = 0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    return rank;
}

/// Per-subspace affinity truncation ranks: min(rank(K_Y), d).
inline std::vector<Index> truncation_ranks(const std::vector<model::SubspaceSpec>& specs,
                                           Index n) {
    std::vector<Index> ranks;
    ranks.reserve(specs.size());
    for (const auto& spec : specs)
        ranks.push_back(std::min(target_kernel_rank(spec.target, n), spec.dim));
    return ranks;
}

/// Mean over matched subspaces of the rank-truncated Fubini-Study affinity of
/// their score bases.
inline double model_affinity(const model::FittedModel& A, const model::FittedModel& B,
                             const std::vector<Index>& ranks) {
    if (A.subspaces.size() != B.subspaces.size() || A.subspaces.size() != ranks.size())
        throw ConfigError("model_affinity: subspace structure mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < ranks.size(); ++j) {
        const Matrix Qa = metrics::score_basis(A.subspaces[j].Z);
        const Matrix Qb = metrics::score_basis(B.subspaces[j].Z);
        total += metrics::fubini_study_affinity(Qa, Qb, ranks[j]);
    }
    return total / static_cast<double>(ranks.size());
}

struct ScanResult {
    std::vector<double> lambdas;                       // grid as supplied
    std::vector<std::optional<model::FittedModel>> models;  // empty slot = failed fit
    std::vector<std::string> failures;                 // per-lambda error text, "" if ok
    AffinityMatrix affinity;                           // over successful fits only
};

/// Fits one model per lambda (independently, optionally in parallel) and
/// assembles the pairwise affinity matrix. Deterministic given the seed.
inline ScanResult lambda_scan(const model::DataMatrix& X,
                              const std::vector<model::SubspaceSpec>& specs,
                              const std::vector<double>& grid, const model::FitConfig& base_config,
                              unsigned workers = 1) {
    if (grid.empty()) throw ConfigError("lambda_scan: grid is empty");
    ScanResult result;
    result.lambdas = grid;
    result.models.resize(grid.size());
    result.failures.assign(grid.size(), "");

    const auto fit_one = [&](std::size_t idx) {
        model::FitConfig config = base_config;
        config.lambda = grid[idx];
        try {
            result.models[idx] = config.algorithm == model::Algorithm::Linear
                                     ? model::fit_linear(X, specs, config)
                                     : model::fit_general(X, specs, config);
        } catch (const std::exception& err) {
            result.failures[idx] = err.what();
        }
    };

    const unsigned n_workers =
        std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(grid.size())));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) fit_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1))
                    fit_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (result.models[i].has_value())
            ok.push_back(i);
        else
            warn("lambda_scan: fit at lambda=" + std::to_string(grid[i]) +
                 " failed and is excluded: " + result.failures[i]);
    }
    const auto ranks = truncation_ranks(specs, X.rows());
    const Index k = static_cast<Index>(ok.size());
    result.affinity.values = Matrix::Identity(k, k);
    result.affinity.lambdas.resize(ok.size());
    for (Index a = 0; a < k; ++a) {
        result.affinity.lambdas[static_cast<std::size_t>(a)] = grid[ok[static_cast<std::size_t>(a)]];
        for (Index b = a + 1; b < k; ++b) {
            const double value = model_affinity(*result.models[ok[static_cast<std::size_t>(a)]],
                                                *result.models[ok[static_cast<std::size_t>(b)]],
                                                ranks);
            result.affinity.values(a, b) = value;
            result.affinity.values(b, a) = value;
        }
    }
    return result;
}

struct ClusterResult {
    std::vector<int> labels;                 // cluster id per grid point
    int n_clusters = 0;
    std::vector<double> representatives;     // lower-median lambda per cluster
    double recommended_lambda = 0.0;         // representative of the largest cluster
    bool degenerate = false;                 // affinity carried no structure
};

namespace detail {

/// Seeded k-means on embedding rows; few restarts, best inertia kept.
inline std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed) {
    const Index n = points.rows();
    Rng rng(seed);
    std::vector<int> best_labels(static_cast<std::size_t>(n), 0);
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 8; ++restart) {
        Matrix centers(k, points.cols());
        for (int c = 0; c < k; ++c)
            centers.row(c) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (Index i = 0; i < n; ++i) {
                int arg = 0;
                double best = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double d = (points.row(i) - centers.row(c)).squaredNorm();
                    if (d < best) {
                        best = d;
                        arg = c;
                    }
                }
                if (labels[static_cast<std::size_t>(i)] != arg) {
                    labels[static_cast<std::size_t>(i)] = arg;
                    changed = true;
                }
            }
            centers.setZero();
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (Index i = 0; i < n; ++i) {
                centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
                ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0)
                    centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
                else
                    centers.row(c) =
                        points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
            }
            if (!changed) break;
        }
        double inertia = 0.0;
        for (Index i = 0; i < n; ++i)
            inertia += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

}  // namespace detail

/// Normalized-Laplacian spectral clustering of the affinity matrix. With
/// n_clusters = 0 ("auto") the count is picked by the largest eigengap of the
/// Laplacian spectrum among 2..min(6, m-1). Representative lambda per cluster
/// is the lower median of its members; the recommendation comes from the
/// largest cluster.
inline ClusterResult spectral_cluster(const AffinityMatrix& affinity, int n_clusters,
                                      std::uint64_t seed = 0) {
    const Index m = affinity.values.rows();
    if (m < 2) throw ConfigError("spectral_cluster: need at least 2 models");
    if (static_cast<std::size_t>(m) != affinity.lambdas.size())
        throw ConfigError("spectral_cluster: affinity/lambda size mismatch");

    ClusterResult out;
    {
        double lo = 1.0, hi = 0.0;
        for (Index i = 0; i < m; ++i)
            for (Index j = i + 1; j < m; ++j) {
                lo = std::min(lo, affinity.values(i, j));
                hi = std::max(hi, affinity.values(i, j));
            }
        out.degenerate = (hi - lo) < 1e-9;
    }

    // L_sym = I - D^{-1/2} A D^{-1/2}
    Vector degree = affinity.values.rowwise().sum();
    Vector inv_sqrt(m);
    for (Index i = 0; i < m; ++i)
        inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
    Matrix L = Matrix::Identity(m, m) -
               (inv_sqrt.asDiagonal() * affinity.values * inv_sqrt.asDiagonal());
    L = 0.5 * (L + L.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(L);
    if (solver.info() != Eigen::Success)
        throw NumericalError("spectral_cluster: Laplacian eigendecomposition failed");

    int k = n_clusters;
    if (k <= 0) {
        const int k_max = static_cast<int>(std::min<Index>(6, m - 1));
        int best_k = 2;
        double best_gap = -1.0;
        for (int cand = 2; cand <= k_max; ++cand) {
            const double gap = solver.eigenvalues()(cand) - solver.eigenvalues()(cand - 1);
            if (gap > best_gap) {
                best_gap = gap;
                best_k = cand;
            }
        }
        k = best_k;
    }
    if (k < 1 || k > static_cast<int>(m))
        throw ConfigError("spectral_cluster: invalid cluster count " + std::to_string(k));

    Matrix embedding = solver.eigenvectors().leftCols(k);
    for (Index i = 0; i < m; ++i) {
        const double norm = embedding.row(i).norm();
        if (norm > 0.0) embedding.row(i) /= norm;
    }
    out.labels = detail::kmeans(embedding, k, seed);
    out.n_clusters = k;

    // Canonical label order: clusters renumbered by first appearance.
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next_id = 0;
    for (auto& label : out.labels) {
        if (remap[static_cast<std::size_t>(label)] < 0) remap[static_cast<std::size_t>(label)] = next_id++;
        label = remap[static_cast<std::size_t>(label)];
    }

    out.representatives.assign(static_cast<std::size_t>(k), 0.0);
    std::vector<std::vector<double>> members(static_cast<std::size_t>(k));
    for (Index i = 0; i < m; ++i)
        members[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])].push_back(
            affinity.lambdas[static_cast<std::size_t>(i)]);
    std::size_t largest = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& v = members[c];
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        out.representatives[c] = v[(v.size() - 1) / 2];  // lower median: an actual grid value
        if (v.size() > members[largest].size()) largest = c;
    }
    out.recommended_lambda = out.representatives[largest];
    return out;
}

}  // namespace sispca::tuning
