#include "sispca/metrics.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sispca;

TEST_CASE("silhouette", "[metrics]") {
    SECTION("two far clusters on a line") {
        Matrix points(4, 1);
        points << 0, 1, 10, 11;
        const std::vector<std::string> labels{"a", "a", "b", "b"};
        // Direct per-point formula: outer points give 9.5/10.5, inner 8.5/9.5.
        const double expected = 0.5 * (9.5 / 10.5 + 8.5 / 9.5);
        REQUIRE(metrics::silhouette(points, labels) == Catch::Approx(expected).epsilon(1e-12));
        REQUIRE(metrics::silhouette(points, labels) == Catch::Approx(0.8997).margin(5e-5));
    }
    SECTION("interleaved identical clusters score non-positive") {
        Matrix points(6, 1);
        points << 0, 0, 1, 1, 2, 2;
        const std::vector<std::string> labels{"a", "b", "a", "b", "a", "b"};
        REQUIRE(metrics::silhouette(points, labels) <= 0.0);
    }
    SECTION("single cluster is undefined") {
        Matrix points(3, 1);
        points << 0, 1, 2;
        REQUIRE_THROWS_AS(metrics::silhouette(points, {"a", "a", "a"}), ConfigError);
    }
    SECTION("singleton cluster contributes zero") {
        Matrix points(3, 1);
        points << 0.0, 0.5, 10.0;
        const std::vector<std::string> labels{"a", "a", "b"};
        const double expected = ((10.0 - 0.5) / 10.0 + (9.5 - 0.5) / 9.5 + 0.0) / 3.0;
        REQUIRE(metrics::silhouette(points, labels) == Catch::Approx(expected).epsilon(1e-12));
    }
    SECTION("bounded by [-1, 1] on random inputs") {
        Rng rng(3);
        for (int t = 0; t < 10; ++t) {
            const Index n = 10 + static_cast<Index>(rng.below(20));
            const Matrix points = oracle::random_matrix(n, 2, 700 + t);
            std::vector<std::string> labels;
            for (Index i = 0; i < n; ++i)
                labels.push_back(std::string(1, static_cast<char>('a' + rng.below(3))));
            const double s = metrics::silhouette(points, labels);
            REQUIRE(s >= -1.0);
            REQUIRE(s <= 1.0);
        }
    }
}

TEST_CASE("principal angles", "[metrics]") {
    SECTION("identical bases give zero angles") {
        const Matrix Q = oracle::random_orthonormal(6, 2, 5);
        for (double theta : metrics::principal_angles(Q, Q))
            REQUIRE(theta == Catch::Approx(0.0).margin(1e-7));
    }
    SECTION("e1 vs e2 in the plane") {
        const Matrix A = Matrix::Identity(2, 2).col(0);
        const Matrix B = Matrix::Identity(2, 2).col(1);
        const auto angles = metrics::principal_angles(A, B);
        REQUIRE(angles.size() == 1);
        REQUIRE(angles[0] == Catch::Approx(std::acos(0.0)).epsilon(1e-12));
    }
    SECTION("shared vector plus orthogonal complement") {
        Matrix A = Matrix::Zero(3, 2);
        A(0, 0) = 1.0;
        A(1, 1) = 1.0;
        Matrix B = Matrix::Zero(3, 2);
        B(0, 0) = 1.0;
        B(2, 1) = 1.0;
        const auto angles = metrics::principal_angles(A, B);
        REQUIRE(angles[0] == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(angles[1] == Catch::Approx(std::acos(0.0)).epsilon(1e-12));
    }
    SECTION("ambient mismatch is a dimension error") {
        REQUIRE_THROWS_AS(
            metrics::principal_angles(Matrix::Identity(3, 1), Matrix::Identity(4, 1)),
            DimensionError);
    }
    SECTION("invariant to orthonormal change of basis within each subspace") {
        const Matrix A = oracle::random_orthonormal(10, 3, 7);
        const Matrix B = oracle::random_orthonormal(10, 3, 9);
        const Matrix R = oracle::random_orthonormal(3, 3, 11);
        const auto before = metrics::principal_angles(A, B);
        const auto after = metrics::principal_angles(A * R, B);
        for (std::size_t i = 0; i < before.size(); ++i)
            REQUIRE(after[i] == Catch::Approx(before[i]).margin(1e-9));
    }
}

TEST_CASE("grassmann geodesic distance", "[metrics]") {
    SECTION("identical subspaces have distance zero") {
        const Matrix Q = oracle::random_orthonormal(8, 3, 13);
        REQUIRE(metrics::grassmann_geodesic(Q, Q) == Catch::Approx(0.0).margin(1e-6));
    }
    SECTION("orthogonal 1-D pair gives pi/2") {
        Matrix A = Matrix::Zero(4, 1), B = Matrix::Zero(4, 1);
        A(0, 0) = 1.0;
        B(1, 0) = 1.0;
        REQUIRE(metrics::grassmann_geodesic(A, B) ==
                Catch::Approx(1.5707963267948966).epsilon(1e-12));
    }
    SECTION("symmetric, and zero iff spans match (rank check)") {
        const Matrix A = oracle::random_orthonormal(9, 2, 15);
        const Matrix B = oracle::random_orthonormal(9, 2, 17);
        REQUIRE(metrics::grassmann_geodesic(A, B) ==
                Catch::Approx(metrics::grassmann_geodesic(B, A)).epsilon(1e-10));
        const Matrix R = oracle::random_orthonormal(2, 2, 19);
        REQUIRE(metrics::grassmann_geodesic(A, A * R) < 1e-6);
        Matrix joint(9, 4);
        joint << A, A * R;
        REQUIRE(Eigen::FullPivLU<Matrix>(joint).rank() == 2);
        REQUIRE(metrics::grassmann_geodesic(A, B) > 0.0);
    }
}

TEST_CASE("fubini-study affinity", "[metrics]") {
    SECTION("identical subspaces give 1") {
        const Matrix Q = oracle::random_orthonormal(7, 2, 21);
        REQUIRE(metrics::fubini_study_affinity(Q, Q, 2) == Catch::Approx(1.0).epsilon(1e-10));
    }
    SECTION("orthogonal 1-D pair gives 0") {
        Matrix A = Matrix::Zero(3, 1), B = Matrix::Zero(3, 1);
        A(0, 0) = 1.0;
        B(1, 0) = 1.0;
        REQUIRE(metrics::fubini_study_affinity(A, B, 1) == Catch::Approx(0.0).margin(1e-14));
    }
    SECTION("1-D pair at 45 degrees gives sqrt(2)/2") {
        Matrix A = Matrix::Zero(2, 1), B(2, 1);
        A(0, 0) = 1.0;
        B << std::sqrt(0.5), std::sqrt(0.5);
        REQUIRE(metrics::fubini_study_affinity(A, B, 1) ==
                Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
    }
    SECTION("always within [0, 1]") {
        for (std::uint64_t t = 0; t < 10; ++t) {
            const Matrix A = oracle::random_orthonormal(10, 3, 800 + t);
            const Matrix B = oracle::random_orthonormal(10, 3, 900 + t);
            const double a = metrics::fubini_study_affinity(A, B, 3);
            REQUIRE(a >= 0.0);
            REQUIRE(a <= 1.0);
        }
    }
    SECTION("k_trunc < 1 is a config error") {
        const Matrix Q = oracle::random_orthonormal(5, 2, 23);
        REQUIRE_THROWS_AS(metrics::fubini_study_affinity(Q, Q, 0), ConfigError);
    }
}

TEST_CASE("spearman correlation", "[metrics]") {
    SECTION("identity column gives 1") {
        Vector y(5);
        y << 1, 2, 3, 4, 5;
        Matrix Z = y;
        REQUIRE(metrics::max_abs_spearman(Z, y) == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("monotone transform invariance, including -y^3") {
        Vector y(6);
        y << -2, -1, 0, 1, 2, 3;
        Matrix Z(6, 1);
        for (Index i = 0; i < 6; ++i) Z(i, 0) = -std::pow(y(i), 3);
        REQUIRE(metrics::max_abs_spearman(Z, y) == Catch::Approx(1.0).epsilon(1e-12));
        Vector y_exp = y.array().exp();
        REQUIRE(metrics::max_abs_spearman(Z, y_exp) == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("matches a rank-then-Pearson oracle with ties") {
        Rng rng(25);
        Matrix Z(20, 3);
        Vector y(20);
        for (Index i = 0; i < 20; ++i) {
            y(i) = std::floor(3.0 * rng.uniform());
            for (Index c = 0; c < 3; ++c) Z(i, c) = std::floor(5.0 * rng.uniform());
        }
        const auto rank_of = [](const Vector& v) {
            const Index n = v.size();
            Vector r(n);
            for (Index i = 0; i < n; ++i) {
                double less = 0.0, equal = 0.0;
                for (Index j = 0; j < n; ++j) {
                    if (v(j) < v(i)) ++less;
                    if (v(j) == v(i)) ++equal;
                }
                r(i) = less + 0.5 * (equal - 1.0) + 1.0;
            }
            return r;
        };
        double expected = 0.0;
        const Vector ry = rank_of(y);
        for (Index c = 0; c < 3; ++c) {
            const Vector rz = rank_of(Z.col(c));
            const Vector a = rz.array() - rz.mean();
            const Vector b = ry.array() - ry.mean();
            expected = std::max(expected, std::abs(a.dot(b) / (a.norm() * b.norm())));
        }
        REQUIRE(metrics::max_abs_spearman(Z, y) == Catch::Approx(expected).epsilon(1e-12));
    }
    SECTION("constant column warns and contributes zero") {
        std::vector<std::string> captured;
        auto previous = warning_handler();
        warning_handler() = [&](const std::string& msg) { captured.push_back(msg); };
        Matrix Z = Matrix::Ones(5, 1);
        Vector y(5);
        y << 1, 2, 3, 4, 5;
        REQUIRE(metrics::max_abs_spearman(Z, y) == 0.0);
        warning_handler() = previous;
        REQUIRE(captured.size() == 1);
    }
}

TEST_CASE("subspace hsic report", "[metrics]") {
    model::DataMatrix X = model::DataMatrix::standardize(oracle::random_matrix(30, 6, 27));
    SECTION("duplicated subspace reports positive self-dependence") {
        model::FittedModel m;
        m.specs.resize(2);
        m.subspaces.resize(2);
        const Matrix U = oracle::random_orthonormal(6, 2, 29);
        for (auto& sub : m.subspaces) {
            sub.U = U;
            sub.Z = X.values * U;
        }
        const auto report = metrics::subspace_hsic_report(m);
        REQUIRE(report.size() == 1);
        const Matrix Zc = oracle::column_centered(m.subspaces[0].Z);
        REQUIRE(report[0].hsic_linear ==
                Catch::Approx((Zc.transpose() * Zc).squaredNorm()).epsilon(1e-10));
        REQUIRE(report[0].hsic_linear > 0.0);
    }
    SECTION("orthogonal score matrices give zero linear HSIC") {
        model::FittedModel m;
        m.specs.resize(2);
        m.subspaces.resize(2);
        Matrix Z1 = Matrix::Zero(4, 1), Z2 = Matrix::Zero(4, 1);
        Z1.col(0) << 1, -1, 1, -1;
        Z2.col(0) << 1, 1, -1, -1;
        m.subspaces[0].Z = Z1;
        m.subspaces[1].Z = Z2;
        const auto report = metrics::subspace_hsic_report(m);
        REQUIRE(report[0].hsic_linear == Catch::Approx(0.0).margin(1e-10));
    }
    SECTION("single subspace gives an empty report") {
        model::FittedModel m;
        m.specs.resize(1);
        m.subspaces.resize(1);
        m.subspaces[0].Z = X.values.leftCols(2);
        REQUIRE(metrics::subspace_hsic_report(m).empty());
    }
}

TEST_CASE("circular correlation and procrustes", "[metrics]") {
    SECTION("identical angles correlate perfectly; rotations leave it invariant") {
        Rng rng(31);
        Vector a(50);
        for (Index i = 0; i < 50; ++i) a(i) = rng.uniform(0.0, 6.28);
        REQUIRE(metrics::circular_correlation(a, a) == Catch::Approx(1.0).epsilon(1e-12));
        Vector b = a.array() + 1.3;
        REQUIRE(metrics::circular_correlation(a, b) == Catch::Approx(1.0).epsilon(1e-6));
    }
    SECTION("procrustes recovers scaled rotations exactly") {
        const Matrix A = oracle::random_matrix(40, 2, 35);
        const Matrix R = oracle::random_orthonormal(2, 2, 37);
        const Matrix B = 2.5 * A * R;
        REQUIRE(metrics::procrustes_r2(A, B) == Catch::Approx(1.0).epsilon(1e-10));
    }
    SECTION("independent clouds fit poorly") {
        const Matrix A = oracle::random_matrix(200, 2, 39);
        const Matrix B = oracle::random_matrix(200, 2, 41);
        REQUIRE(metrics::procrustes_r2(A, B) < 0.2);
    }
}
