#pragma once

#include "sispca/metrics.hpp"
#include "sispca/model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sispca::simulate {

/// Generator knobs. Defaults give the two-Gaussians / noisy-grid / ring
/// layout with the grid as the dominant source of variance, so the
/// unsupervised competition between subspaces is non-trivial.
struct SimulationOptions {
    double gaussian_mean_x = 3.0;   // S1 cluster centers at (+-mean_x, 0)
    double grid_half_span = 12.0;   // S2 grid covers [-h, h]^2
    double grid_jitter = 0.1;
    double ring_radius = 3.0;
    double ring_jitter = 0.05;
    double observation_noise = 0.0;  // optional, applied after mixing
};

struct SyntheticDataset {
    Matrix X;          // n x 20 observed
    Matrix S1, S2, S3;  // n x 2 latents
    std::vector<std::string> labels_S1;  // binary labels
    Matrix coords_S2;  // n x 2 clean grid coordinates
    Vector angle_S3;   // n angles in [0, 2*pi)
    Matrix mixing;     // 6 x 20, entries in [0, 1]
    std::uint64_t seed = 0;
    SimulationOptions options;
};

/// Three independent 2-D latent subspaces embedded in 20 dimensions through a
/// uniform-[0,1] mixing matrix. All randomness derives from the seed.
inline SyntheticDataset generate(Index n, std::uint64_t seed,
                                 const SimulationOptions& options = {}) {
    if (n < 10) throw ConfigError("generate: need n >= 10");
    constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
    Rng rng(seed);
    SyntheticDataset out;
    out.seed = seed;
    out.options = options;

    // S1: equal mixture of two isotropic unit-variance Gaussians.
    out.S1.resize(n, 2);
    out.labels_S1.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const bool second = i >= n / 2;
        out.labels_S1[static_cast<std::size_t>(i)] = second ? "B" : "A";
        const double cx = second ? options.gaussian_mean_x : -options.gaussian_mean_x;
        out.S1(i, 0) = cx + rng.normal();
        out.S1(i, 1) = rng.normal();
    }

    // S2: uniformly sampled cells of a g x g grid plus Gaussian jitter.
    const Index g = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n))));
    const double step = g > 1 ? 2.0 * options.grid_half_span / static_cast<double>(g - 1) : 0.0;
    out.coords_S2.resize(n, 2);
    out.S2.resize(n, 2);
    for (Index i = 0; i < n; ++i) {
        for (int axis = 0; axis < 2; ++axis) {
            const auto cell = static_cast<double>(rng.below(static_cast<std::uint64_t>(g)));
            out.coords_S2(i, axis) = -options.grid_half_span + step * cell;
            out.S2(i, axis) = out.coords_S2(i, axis) + options.grid_jitter * rng.normal();
        }
    }

    // S3: ring with radial jitter; the angle is the hidden manifold coordinate.
    out.S3.resize(n, 2);
    out.angle_S3.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double phi = rng.uniform(0.0, kTwoPi);
        const double r = options.ring_radius + options.ring_jitter * rng.normal();
        out.angle_S3(i) = phi;
        out.S3(i, 0) = r * std::cos(phi);
        out.S3(i, 1) = r * std::sin(phi);
    }

    out.mixing = rng.uniform_matrix(6, 20, 0.0, 1.0);
    Matrix L(n, 6);
    L << out.S1, out.S2, out.S3;
    out.X = L * out.mixing;
    if (options.observation_noise > 0.0) {
        out.X += options.observation_noise * rng.normal_matrix(n, 20);
    }
    return out;
}

struct RecoveryScore {
    double s1_silhouette = 0.0;
    double s2_procrustes_r2 = 0.0;
    double s3_angle_circular_corr = 0.0;
};

/// Scores a 3-subspace fit against the generator's ground truth. The S2
/// scores are orthonormalized before the Procrustes fit, consistent with the
/// score-basis convention used for subspace distances; the grid coordinates
/// are isotropic, so this removes the arbitrary within-span basis while
/// leaving genuine mixing errors visible.
inline RecoveryScore recovery_score(const model::FittedModel& model,
                                    const SyntheticDataset& truth) {
    if (model.subspaces.size() != 3)
        throw ConfigError("recovery_score: expected a 3-subspace model (S1, S2, S3)");
    for (const auto& sub : model.subspaces)
        if (sub.Z.rows() != truth.X.rows())
            throw ConfigError("recovery_score: model was not fitted on the dataset");
    RecoveryScore score;
    score.s1_silhouette = metrics::silhouette(model.subspaces[0].Z, truth.labels_S1);
    const Matrix Q2 = metrics::score_basis(model.subspaces[1].Z);
    score.s2_procrustes_r2 = metrics::procrustes_r2(Q2, truth.coords_S2);
    const Matrix& Z3 = model.subspaces[2].Z;
    if (Z3.cols() < 2) throw ConfigError("recovery_score: S3 subspace needs >= 2 dimensions");
    Vector fitted_angle(Z3.rows());
    for (Index i = 0; i < Z3.rows(); ++i) fitted_angle(i) = std::atan2(Z3(i, 1), Z3(i, 0));
    score.s3_angle_circular_corr =
        std::abs(metrics::circular_correlation(fitted_angle, truth.angle_S3));
    return score;
}

}  // namespace sispca::simulate
