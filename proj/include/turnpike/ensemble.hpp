#pragma once

#include <cstdint>
#include <vector>

#include "turnpike/numerics.hpp"

namespace turnpike {

// ============================================================================
// Reproducible random numbers (SplitMix64; bit-exact across implementations)
// ============================================================================

struct RngState {
    std::uint64_t state = 0;
};

/// Advances the SplitMix64 recurrence and returns the raw 64-bit output.
std::uint64_t rng_next_u64(RngState& rng);

/// Uniform draw in [0,1) from the top 53 bits of the next SplitMix64 output.
double rng_next_uniform(RngState& rng);

/// Smallest k with CDF_Poisson(lambda)(k) > u; pmf accumulated in long double.
int poisson_inverse_cdf(double u, double lambda);

/// Poisson(lambda) draw by inverse CDF on one uniform. Requires 0 < lambda <= 50.
int sample_poisson(RngState& rng, double lambda);

// ============================================================================
// Weighted-atom representation of the probability space
// ============================================================================

// One atom omega: dynamics A (n x n), control map B (n x m), observation C (p x n).
struct ParameterSample {
    double weight = 0.0;
    Matrix A;
    Matrix B;
    Matrix C;
};

struct Ensemble {
    std::vector<ParameterSample> samples;
    Eigen::Index n = 0; // state dimension
    Eigen::Index m = 0; // control dimension
    Eigen::Index p = 0; // observation dimension

    Eigen::Index size() const { return static_cast<Eigen::Index>(samples.size()); }

    // Checks weight positivity, sum-to-one within 1e-12, consistent dims,
    // finite entries. Throws DimensionMismatch / ZeroWeight.
    void validate() const;
};

Ensemble make_ensemble(std::vector<ParameterSample> samples);

enum class DistributionKind { Explicit, PoissonScaled, TwoPoint };

struct DistributionSpec {
    DistributionKind kind = DistributionKind::Explicit;

    // explicit
    std::vector<ParameterSample> samples;

    // poisson-scaled: sample i gets A = alpha_i * A0, B = beta_i * B0, C = C0
    // with alpha_i, beta_i iid Poisson(lambda), alpha drawn before beta.
    Matrix A0, B0, C0;
    double lambda = 5.0;
    int sample_count = 0;
    std::uint64_t seed = 0;

    // two-point: explicit atoms with the given masses.
    std::vector<ParameterSample> atoms; // weight field holds the mass
};

Ensemble build_ensemble(const DistributionSpec& spec);

// ============================================================================
// Expectation operator on ensemble-indexed values
// ============================================================================

/// E[v] = sum_i w_i v_i accumulated in sample order. The reduction order is
/// part of the contract: results are identical no matter how the inputs were
/// produced.
Vector expect(const Ensemble& ens, const std::vector<Vector>& values);

/// E[C(.)v(.)] = sum_i w_i C_i v_i in sample order.
Vector observed_mean(const Ensemble& ens, const std::vector<Vector>& states);

/// Weighted inner product sum_i w_i <a_i, b_i>, the finite-atom realization of
/// the L^2(Omega; R^n) pairing.
double weighted_dot(const Ensemble& ens, const std::vector<Vector>& a,
                    const std::vector<Vector>& b);

double weighted_norm(const Ensemble& ens, const std::vector<Vector>& a);

} // namespace turnpike
