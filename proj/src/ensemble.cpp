#include "turnpike/ensemble.hpp"

#include <cmath>

namespace turnpike {

std::uint64_t rng_next_u64(RngState& rng) {
    rng.state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = rng.state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double rng_next_uniform(RngState& rng) {
    // Top 53 bits give a dyadic rational in [0,1) representable exactly.
    return static_cast<double>(rng_next_u64(rng) >> 11) * 0x1.0p-53;
}

int poisson_inverse_cdf(double u, double lambda) {
    if (!(lambda > 0.0) || lambda > 50.0)
        throw std::invalid_argument("poisson: lambda must lie in (0, 50]");
    long double pmf = std::exp(static_cast<long double>(-lambda));
    long double cdf = pmf;
    int k = 0;
    while (cdf <= static_cast<long double>(u)) {
        ++k;
        pmf *= static_cast<long double>(lambda) / k;
        cdf += pmf;
        if (k > 4000) break; // unreachable for lambda <= 50 and u < 1
    }
    return k;
}

int sample_poisson(RngState& rng, double lambda) {
    return poisson_inverse_cdf(rng_next_uniform(rng), lambda);
}

namespace {

void require_finite(const Matrix& M, const char* what) {
    if (!M.allFinite())
        throw DimensionMismatch(std::string(what) + ": non-finite entries");
}

} // namespace

void Ensemble::validate() const {
    if (samples.empty()) throw DimensionMismatch("ensemble: no samples");
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ParameterSample& s = samples[i];
        if (!(s.weight > 0.0))
            throw ZeroWeight("ensemble: sample " + std::to_string(i) + " has non-positive weight");
        if (s.A.rows() != n || s.A.cols() != n || s.B.rows() != n || s.B.cols() != m ||
            s.C.rows() != p || s.C.cols() != n)
            throw DimensionMismatch("ensemble: sample " + std::to_string(i) +
                                    " has inconsistent matrix dimensions");
        require_finite(s.A, "ensemble A");
        require_finite(s.B, "ensemble B");
        require_finite(s.C, "ensemble C");
        weight_sum += s.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-12)
        throw ZeroWeight("ensemble: weights sum to " + std::to_string(weight_sum) +
                         ", expected 1 within 1e-12");
}

Ensemble make_ensemble(std::vector<ParameterSample> samples) {
    Ensemble ens;
    if (samples.empty()) throw DimensionMismatch("ensemble: no samples");
    ens.n = samples[0].A.rows();
    ens.m = samples[0].B.cols();
    ens.p = samples[0].C.rows();
    ens.samples = std::move(samples);
    ens.validate();
    return ens;
}

Ensemble build_ensemble(const DistributionSpec& spec) {
    switch (spec.kind) {
    case DistributionKind::Explicit:
        return make_ensemble(spec.samples);

    case DistributionKind::TwoPoint: {
        if (spec.atoms.size() != 2)
            throw DimensionMismatch("two-point spec: expected exactly 2 atoms");
        return make_ensemble(spec.atoms);
    }

    case DistributionKind::PoissonScaled: {
        if (spec.sample_count < 1)
            throw DimensionMismatch("poisson-scaled spec: sample_count must be >= 1");
        if (spec.A0.rows() != spec.A0.cols())
            throw DimensionMismatch("poisson-scaled spec: A0 must be square");
        if (spec.B0.rows() != spec.A0.rows() || spec.C0.cols() != spec.A0.rows())
            throw DimensionMismatch("poisson-scaled spec: base matrix dimensions disagree");
        RngState rng{spec.seed};
        std::vector<ParameterSample> samples;
        samples.reserve(static_cast<std::size_t>(spec.sample_count));
        const double weight = 1.0 / spec.sample_count;
        for (int i = 0; i < spec.sample_count; ++i) {
            const int alpha = sample_poisson(rng, spec.lambda); // alpha before beta
            const int beta = sample_poisson(rng, spec.lambda);
            ParameterSample s;
            s.weight = weight;
            s.A = static_cast<double>(alpha) * spec.A0;
            s.B = static_cast<double>(beta) * spec.B0;
            s.C = spec.C0;
            samples.push_back(std::move(s));
        }
        return make_ensemble(std::move(samples));
    }
    }
    throw DimensionMismatch("distribution spec: unknown kind");
}

Vector expect(const Ensemble& ens, const std::vector<Vector>& values) {
    if (values.size() != ens.samples.size())
        throw DimensionMismatch("expect: one value per sample required");
    Vector acc = Vector::Zero(values[0].size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != acc.size())
            throw DimensionMismatch("expect: value dimensions differ across samples");
        acc.noalias() += ens.samples[i].weight * values[i];
    }
    return acc;
}

Vector observed_mean(const Ensemble& ens, const std::vector<Vector>& states) {
    if (states.size() != ens.samples.size())
        throw DimensionMismatch("observed_mean: one state per sample required");
    Vector acc = Vector::Zero(ens.p);
    for (std::size_t i = 0; i < states.size(); ++i)
        acc.noalias() += ens.samples[i].weight * (ens.samples[i].C * states[i]);
    return acc;
}

double weighted_dot(const Ensemble& ens, const std::vector<Vector>& a,
                    const std::vector<Vector>& b) {
    if (a.size() != ens.samples.size() || b.size() != ens.samples.size())
        throw DimensionMismatch("weighted_dot: one vector per sample required");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += ens.samples[i].weight * a[i].dot(b[i]);
    return acc;
}

double weighted_norm(const Ensemble& ens, const std::vector<Vector>& a) {
    return std::sqrt(std::max(0.0, weighted_dot(ens, a, a)));
}

} // namespace turnpike
