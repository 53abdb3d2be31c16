#pragma once

// Test-only oracles, kept independent of the library's solver paths.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace oracles {

// Number of eigenvalues of S strictly below lambda via an unpivoted LDL^T
// sweep; returns -1 when a pivot collapses (caller retries with a jitter).
inline int eigs_below(Eigen::MatrixXd S, double lambda) {
    const int n = static_cast<int>(S.rows());
    for (int i = 0; i < n; ++i) S(i, i) -= lambda;
    const double tiny = 1e-13 * std::max(1.0, S.cwiseAbs().maxCoeff());
    int negatives = 0;
    for (int k = 0; k < n; ++k) {
        const double pivot = S(k, k);
        if (std::abs(pivot) < tiny) return -1;
        if (pivot < 0.0) ++negatives;
        for (int i = k + 1; i < n; ++i) {
            const double f = S(i, k) / pivot;
            for (int j = k; j < n; ++j) S(i, j) -= f * S(k, j);
        }
    }
    return negatives;
}

// Smallest eigenvalue of a symmetric matrix by inertia bisection on a
// Gershgorin bracket.
inline double smallest_eigenvalue(const Eigen::MatrixXd& S) {
    const int n = static_cast<int>(S.rows());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < n; ++i) {
        double radius = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) radius += std::abs(S(i, j));
        lo = std::min(lo, S(i, i) - radius);
        hi = std::max(hi, S(i, i) + radius);
    }
    lo -= 1.0;
    hi += 1.0;
    const double scale = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    const auto count = [&](double lambda) {
        for (int attempt = 0; attempt < 8; ++attempt) {
            const int c = eigs_below(S, lambda + attempt * 3e-12 * scale);
            if (c >= 0) return c;
        }
        return eigs_below(S, lambda + 1e-10 * scale);
    };
    for (int it = 0; it < 120 && hi - lo > 1e-12 * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count(mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Reference SplitMix64 kept separate from the library implementation.
inline std::uint64_t splitmix64_reference(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 seeded_engine(unsigned seed) { return std::mt19937_64(seed); }

inline Eigen::MatrixXd random_matrix(std::mt19937_64& eng, int rows, int cols,
                                     double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::MatrixXd M(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) M(r, c) = dist(eng);
    return M;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& eng, int dim, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = dist(eng);
    return v;
}

// Random matrix with positive-definite symmetric part (eigenvalues of the
// symmetric part in [lo, hi]) plus a bounded skew part.
inline Eigen::MatrixXd random_spd_dominant(std::mt19937_64& eng, int n, double lo,
                                           double hi, double skew = 0.3) {
    const Eigen::MatrixXd G = random_matrix(eng, n, n);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    const Eigen::MatrixXd Q = qr.householderQ();
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = dist(eng);
    const Eigen::MatrixXd sym = Q * d.asDiagonal() * Q.transpose();
    Eigen::MatrixXd W = random_matrix(eng, n, n, skew);
    return sym + 0.5 * (W - W.transpose());
}

} // namespace oracles
