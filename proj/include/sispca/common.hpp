#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>

namespace sispca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy. Dimension/index/config errors are caller mistakes,
// numerical errors are solver failures.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Warning sink. Defaults to stderr; tests may swap it to capture messages.
inline std::function<void(const std::string&)>& warning_handler() {
    static std::function<void(const std::string&)> handler =
        [](const std::string& msg) { std::cerr << "[sispca] warning: " << msg << "\n"; };
    return handler;
}

inline void warn(const std::string& msg) { warning_handler()(msg); }

/// Deterministic RNG used for every stochastic stage. Wraps std::mt19937_64
/// (whose output sequence is pinned by the standard) and derives variates
/// without std::*_distribution, so streams are reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; one spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(theta);
        has_spare_ = true;
        return radius * std::cos(theta);
    }

    /// Uniform integer in [0, n). Modulo bias is irrelevant at our ranges.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    Matrix normal_matrix(Index rows, Index cols) {
        Matrix out(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) out(i, j) = normal();
        return out;
    }

    Matrix uniform_matrix(Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
        Matrix out(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) out(i, j) = uniform(lo, hi);
        return out;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// FNV-1a over a byte string; used for config hashes in manifests.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace sispca
