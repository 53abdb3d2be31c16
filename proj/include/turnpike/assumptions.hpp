#pragma once

#include <optional>
#include <string>
#include <vector>

#include "turnpike/dynamics.hpp"

namespace turnpike {

// Per-sample feedback gains; a single entry means one constant gain.
struct FeedbackSpec {
    std::vector<Matrix> gains;

    static FeedbackSpec constant(Matrix K) { return FeedbackSpec{{std::move(K)}}; }
    static FeedbackSpec per_sample(std::vector<Matrix> Ks) { return FeedbackSpec{std::move(Ks)}; }

    const Matrix& gain(Eigen::Index sample) const {
        return gains.size() == 1 ? gains[0] : gains[static_cast<std::size_t>(sample)];
    }
    std::vector<Matrix> expanded(Eigen::Index n_samples) const;
};

struct CheckReport {
    std::string variant;
    double alpha = 0.0;           // largest certified coercivity constant
    bool passed = false;          // alpha > 0
    std::vector<Vector> witness;  // ensemble-indexed vector attaining the minimum Rayleigh quotient
    std::vector<Matrix> gain_used;
    bool exhaustive = true;       // false for randomized falsification / grid scans
};

/// Detectability on average: coercivity of v -> Av + K E[K C v] on the
/// weighted product space, reduced to a symmetric eigenproblem by the D^{1/2}
/// similarity. Requires p == n.
CheckReport check_A1(const Ensemble& ens, const FeedbackSpec& K);

enum class A2Variant { Single, Double };

/// Stabilizability on average. Single variant (default): A^T v + K E[B^T v]
/// with K in R^{n x m}. Double variant mirrors check_A1 with
/// (A, C, K) -> (A^T, B^T, K); it only typechecks for m == n.
CheckReport check_A2(const Ensemble& ens, const FeedbackSpec& K,
                     A2Variant variant = A2Variant::Single);

/// Samplewise condition: alpha = min_i lambda_min(sym(A_i + K_i C_i)).
CheckReport check_A0(const Ensemble& ens, const FeedbackSpec& K);

enum class CoercivitySide { AC, AB };

/// sqrt(lambda_min) of the quadratic form sum_i w_i |A_i v_i|^2 + |E[C v]|^2
/// (side AB uses A^T, B^T); certifies |Av|_w + |E[Cv]| >= alpha |v|_w.
double stationary_coercivity(const Ensemble& ens, CoercivitySide side);

enum class ComplementarySide { C, B };

/// Averaged coercivity <E[(A + KC)v], E[v]> >= alpha |E[v]|^2 for all v.
/// Holds for all v only when A_i + K_i C_i is sample-independent; then
/// alpha = lambda_min(sym(A + KC)) and the report is exhaustive. Otherwise a
/// seeded randomized search (1e4 draws) looks for violations and the report
/// carries the most violating Rayleigh value, flagged non-exhaustive.
CheckReport check_complementary(const Ensemble& ens, const FeedbackSpec& K,
                                ComplementarySide side);

struct DecayCheck {
    bool holds = false;
    double min_slack = 0.0; // min over nodes of bound - |E[x]|^2
};

/// Simulates x_t + (A + KC)x = 0 and asserts
/// |E[x(t_k)]|^2 <= e^{-alpha t_k} |E[x0]|^2 + 1e-10 at every node.
DecayCheck verify_average_decay(const Ensemble& ens, const FeedbackSpec& K,
                                const TimeGrid& grid, const std::vector<Vector>& x0,
                                double alpha);

enum class ScanTarget { A1, A2, A0 };

struct ScanRange {
    double lo = -10.0;
    double hi = 10.0;
    double step = 0.05;
};

/// Grid-scans scalar gain entries (one per sample, at most 4 in total) and
/// returns the report with maximal alpha; ties break on the first point in
/// lexicographic scan order. A negative outcome is heuristic falsification
/// only and is reported as non-exhaustive.
CheckReport scan_scalar_feedback(const Ensemble& ens, ScanTarget which,
                                 const std::vector<ScanRange>& ranges);

} // namespace turnpike
