#include "sispca/simulate.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sispca;
using simulate::SimulationOptions;

TEST_CASE("generator determinism and structure", "[simulate]") {
    SECTION("same seed reproduces X bit for bit") {
        const auto a = simulate::generate(200, 42);
        const auto b = simulate::generate(200, 42);
        REQUIRE((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((a.mixing - b.mixing).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(a.labels_S1 == b.labels_S1);
    }
    SECTION("different seeds differ") {
        const auto a = simulate::generate(100, 1);
        const auto b = simulate::generate(100, 2);
        REQUIRE((a.X - b.X).cwiseAbs().maxCoeff() > 0.0);
    }
    SECTION("X equals the latent concatenation times the mixing") {
        const auto d = simulate::generate(50, 7);
        Matrix L(50, 6);
        L << d.S1, d.S2, d.S3;
        REQUIRE((d.X - L * d.mixing).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(d.mixing.minCoeff() >= 0.0);
        REQUIRE(d.mixing.maxCoeff() <= 1.0);
    }
    SECTION("zero-jitter ring lies exactly on the circle") {
        SimulationOptions options;
        options.ring_jitter = 0.0;
        const auto d = simulate::generate(60, 9, options);
        for (Index i = 0; i < 60; ++i)
            REQUIRE(d.S3.row(i).norm() == Catch::Approx(options.ring_radius).epsilon(1e-12));
    }
    SECTION("angles live in [0, 2pi)") {
        const auto d = simulate::generate(120, 11);
        REQUIRE(d.angle_S3.minCoeff() >= 0.0);
        REQUIRE(d.angle_S3.maxCoeff() < 2.0 * 3.14159265358979323846);
    }
    SECTION("rank collapses to 6 with all jitters zero") {
        SimulationOptions options;
        options.grid_jitter = 0.0;
        options.ring_jitter = 0.0;
        const auto d = simulate::generate(80, 13, options);
        Eigen::JacobiSVD<Matrix> svd(d.X);
        int rank = 0;
        for (Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++rank;
        REQUIRE(rank <= 6);
    }
    SECTION("n below 10 is rejected") {
        REQUIRE_THROWS_AS(simulate::generate(5, 1), ConfigError);
    }
}

TEST_CASE("latent subspaces are mutually independent", "[simulate]") {
    // Normalized Gaussian HSIC between latent pairs stays below the 95th
    // percentile of a permutation null (200 permutations).
    const auto d = simulate::generate(500, 17);
    const std::array<const Matrix*, 3> latents{&d.S1, &d.S2, &d.S3};
    Rng rng(19);
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            const auto Ka = kernels::gaussian_kernel(*latents[a], kernels::MedianWidth{});
            const auto Kb = kernels::gaussian_kernel(*latents[b], kernels::MedianWidth{});
            const double observed = kernels::hsic(Ka, Kb, true);
            std::vector<double> null;
            Matrix Kb_perm = Kb.values;
            std::vector<Index> perm(500);
            std::iota(perm.begin(), perm.end(), Index{0});
            for (int t = 0; t < 200; ++t) {
                for (Index i = 499; i > 0; --i)
                    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
                for (Index i = 0; i < 500; ++i)
                    for (Index j = 0; j < 500; ++j)
                        Kb_perm(i, j) = Kb.values(perm[i], perm[j]);
                null.push_back(kernels::hsic(Ka, {Kb_perm, false}, true));
            }
            std::sort(null.begin(), null.end());
            const double q95 = null[189];  // 95th percentile of 200
            INFO("pair (" << a << "," << b << "): observed " << observed << " q95 " << q95);
            REQUIRE(observed <= q95);
        }
    }
}

TEST_CASE("recovery score", "[simulate]") {
    const auto truth = simulate::generate(300, 21);
    SECTION("injected truth latents score perfectly on S2") {
        model::FittedModel m;
        m.specs.resize(3);
        m.subspaces.resize(3);
        m.subspaces[0].Z = truth.S1;
        m.subspaces[1].Z = truth.coords_S2;  // exact coordinates
        m.subspaces[2].Z = truth.S3;
        const auto score = simulate::recovery_score(m, truth);
        REQUIRE(score.s2_procrustes_r2 == Catch::Approx(1.0).epsilon(1e-10));
        REQUIRE(score.s3_angle_circular_corr > 0.99);
        REQUIRE(score.s1_silhouette > 0.4);
    }
    SECTION("random junk scores carry no structure") {
        const auto big = simulate::generate(1000, 23);
        model::FittedModel m;
        m.specs.resize(3);
        m.subspaces.resize(3);
        for (int j = 0; j < 3; ++j)
            m.subspaces[static_cast<std::size_t>(j)].Z =
                oracle::random_matrix(1000, 2, 2400 + static_cast<std::uint64_t>(j));
        const auto score = simulate::recovery_score(m, big);
        REQUIRE(std::abs(score.s1_silhouette) <= 0.1);
        REQUIRE(score.s3_angle_circular_corr <= 0.2);
    }
    SECTION("structure mismatch is rejected") {
        model::FittedModel m;
        m.specs.resize(2);
        m.subspaces.resize(2);
        REQUIRE_THROWS_AS(simulate::recovery_score(m, truth), ConfigError);
    }
}

TEST_CASE("sisPCA recovers the hidden ring where sPCA does not", "[simulate]") {
    // Paired run at n = 1000: the unsupervised subspace finds the ring only
    // once the disentanglement penalty pushes it away from S1/S2 content.
    const auto truth = simulate::generate(1000, 5);
    const model::DataMatrix X = model::DataMatrix::standardize(truth.X);
    std::vector<model::SubspaceSpec> specs(3);
    specs[0].name = "s1";
    specs[0].dim = 2;
    specs[0].target = kernels::SupervisionTarget::categorical(truth.labels_S1, "labels");
    specs[1].name = "s2";
    specs[1].dim = 2;
    specs[1].target = kernels::SupervisionTarget::continuous(truth.coords_S2, "coords");
    specs[2].name = "s3";
    specs[2].dim = 2;
    specs[2].target = kernels::SupervisionTarget::identity("none");

    model::FitConfig config;
    config.lambda = 1.0;
    const auto sispca = model::fit_linear(X, specs, config);
    config.lambda = 0.0;
    const auto spca = model::fit_linear(X, specs, config);

    const auto score1 = simulate::recovery_score(sispca, truth);
    const auto score0 = simulate::recovery_score(spca, truth);
    INFO("sisPCA circ=" << score1.s3_angle_circular_corr
                        << " sPCA circ=" << score0.s3_angle_circular_corr);
    REQUIRE(score1.s3_angle_circular_corr > 0.8);
    REQUIRE(score0.s3_angle_circular_corr < score1.s3_angle_circular_corr);
}
