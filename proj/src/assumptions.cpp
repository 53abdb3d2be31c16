#include "turnpike/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "turnpike/parallel.hpp"

namespace turnpike {

std::vector<Matrix> FeedbackSpec::expanded(Eigen::Index n_samples) const {
    if (gains.empty()) throw DimensionMismatch("feedback: no gains given");
    if (gains.size() != 1 && gains.size() != static_cast<std::size_t>(n_samples))
        throw DimensionMismatch("feedback: need one gain or one gain per sample");
    std::vector<Matrix> out(static_cast<std::size_t>(n_samples));
    for (Eigen::Index i = 0; i < n_samples; ++i) out[static_cast<std::size_t>(i)] = gain(i);
    return out;
}

namespace {

// Stacked operator on the weighted product space, rescaled by D^{1/2} so the
// weighted Rayleigh quotient becomes the Euclidean one. Blocks:
//   (i,j) -> delta_ij * diag_i + sqrt(w_i w_j) * couple_i * couple_factor_j.
Matrix assemble_stacked(const Ensemble& ens, const std::vector<Matrix>& diag,
                        const std::vector<Matrix>& couple_left,
                        const std::vector<Matrix>& couple_right) {
    const Eigen::Index n = ens.n;
    const Eigen::Index dim = n * ens.size();
    Matrix L = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
        const double wi = ens.samples[static_cast<std::size_t>(i)].weight;
        L.block(i * n, i * n, n, n) = diag[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < ens.size(); ++j) {
            const double wj = ens.samples[static_cast<std::size_t>(j)].weight;
            L.block(i * n, j * n, n, n).noalias() +=
                std::sqrt(wi * wj) * couple_left[static_cast<std::size_t>(i)] *
                couple_right[static_cast<std::size_t>(j)];
        }
    }
    return L;
}

CheckReport report_from_stacked(const Ensemble& ens, Matrix L, std::string variant,
                                std::vector<Matrix> gains) {
    const Matrix sym = 0.5 * (L + L.transpose());
    const MinEigPair eig = sym_eig_min(sym);
    CheckReport report;
    report.variant = std::move(variant);
    report.alpha = eig.value;
    report.passed = eig.value > 0.0;
    report.gain_used = std::move(gains);
    report.exhaustive = true;
    report.witness.resize(static_cast<std::size_t>(ens.size()));
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
        const double wi = ens.samples[static_cast<std::size_t>(i)].weight;
        report.witness[static_cast<std::size_t>(i)] =
            eig.vector.segment(i * ens.n, ens.n) / std::sqrt(wi);
    }
    return report;
}

} // namespace

CheckReport check_A1(const Ensemble& ens, const FeedbackSpec& K) {
    ens.validate();
    if (ens.p != ens.n)
        throw DimensionMismatch("check_A1: requires p == n (C acts on the state space)");
    const std::vector<Matrix> gains = K.expanded(ens.size());
    std::vector<Matrix> diag(gains.size()), right(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (gains[i].rows() != ens.n || gains[i].cols() != ens.n)
            throw DimensionMismatch("check_A1: gains must be n x n");
        diag[i] = ens.samples[i].A;
        right[i] = gains[i] * ens.samples[i].C;
    }
    return report_from_stacked(ens, assemble_stacked(ens, diag, gains, right), "A1", gains);
}

CheckReport check_A2(const Ensemble& ens, const FeedbackSpec& K, A2Variant variant) {
    ens.validate();
    const std::vector<Matrix> gains = K.expanded(ens.size());
    std::vector<Matrix> diag(gains.size()), left(gains.size()), right(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (gains[i].rows() != ens.n || gains[i].cols() != ens.m)
            throw DimensionMismatch("check_A2: gains must be n x m");
        diag[i] = ens.samples[i].A.transpose();
        if (variant == A2Variant::Single) {
            left[i] = gains[i];
            right[i] = ens.samples[i].B.transpose();
        } else {
            if (ens.m != ens.n)
                throw DimensionMismatch(
                    "check_A2: the double-application variant requires m == n");
            left[i] = gains[i];
            right[i] = gains[i] * ens.samples[i].B.transpose();
        }
    }
    const char* name = variant == A2Variant::Single ? "A2-single" : "A2-double";
    return report_from_stacked(ens, assemble_stacked(ens, diag, left, right), name, gains);
}

CheckReport check_A0(const Ensemble& ens, const FeedbackSpec& K) {
    ens.validate();
    const std::vector<Matrix> gains = K.expanded(ens.size());
    CheckReport report;
    report.variant = "A0";
    report.exhaustive = true;
    report.gain_used = gains;
    report.alpha = std::numeric_limits<double>::infinity();
    Eigen::Index argmin = 0;
    Vector argmin_vec;
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
        const ParameterSample& s = ens.samples[static_cast<std::size_t>(i)];
        const Matrix& Ki = gains[static_cast<std::size_t>(i)];
        if (Ki.rows() != ens.n || Ki.cols() != ens.p)
            throw DimensionMismatch("check_A0: gains must be n x p");
        const Matrix closed = s.A + Ki * s.C;
        const MinEigPair eig = sym_eig_min(0.5 * (closed + closed.transpose()));
        if (eig.value < report.alpha) {
            report.alpha = eig.value;
            argmin = i;
            argmin_vec = eig.vector;
        }
    }
    report.passed = report.alpha > 0.0;
    report.witness.assign(static_cast<std::size_t>(ens.size()), Vector::Zero(ens.n));
    report.witness[static_cast<std::size_t>(argmin)] = argmin_vec;
    return report;
}

double stationary_coercivity(const Ensemble& ens, CoercivitySide side) {
    ens.validate();
    const Eigen::Index n = ens.n;
    const Eigen::Index dim = n * ens.size();
    const Eigen::Index obs_dim = side == CoercivitySide::AC ? ens.p : ens.m;

    Matrix Q = Matrix::Zero(dim, dim);
    Matrix G = Matrix::Zero(obs_dim, dim);
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
        const ParameterSample& s = ens.samples[static_cast<std::size_t>(i)];
        const Matrix Ai = side == CoercivitySide::AC ? s.A : Matrix(s.A.transpose());
        const Matrix Oi = side == CoercivitySide::AC ? s.C : Matrix(s.B.transpose());
        Q.block(i * n, i * n, n, n) = Ai.transpose() * Ai;
        G.block(0, i * n, obs_dim, n) = std::sqrt(s.weight) * Oi;
    }
    Q.noalias() += G.transpose() * G;
    return std::sqrt(std::max(0.0, sym_eig_min(Q).value));
}

CheckReport check_complementary(const Ensemble& ens, const FeedbackSpec& K,
                                ComplementarySide side) {
    ens.validate();
    const std::vector<Matrix> gains = K.expanded(ens.size());
    std::vector<Matrix> closed(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        const ParameterSample& s = ens.samples[i];
        if (side == ComplementarySide::C) {
            if (gains[i].rows() != ens.n || gains[i].cols() != ens.p)
                throw DimensionMismatch("check_complementary: gains must be n x p");
            closed[i] = s.A + gains[i] * s.C;
        } else {
            if (gains[i].rows() != ens.n || gains[i].cols() != ens.m)
                throw DimensionMismatch("check_complementary: gains must be n x m");
            closed[i] = s.A.transpose() + gains[i] * s.B.transpose();
        }
    }
    const char* name = side == ComplementarySide::C ? "complementary-C" : "complementary-B";

    double max_dev = 0.0;
    for (std::size_t i = 1; i < closed.size(); ++i)
        max_dev = std::max(max_dev, (closed[i] - closed[0]).cwiseAbs().maxCoeff());
    const double scale = std::max(1.0, closed[0].cwiseAbs().maxCoeff());

    CheckReport report;
    report.variant = name;
    report.gain_used = gains;

    if (max_dev <= 1e-10 * scale) {
        // The averaged form reduces to <G E[v], E[v]> with one closed-loop matrix.
        const MinEigPair eig = sym_eig_min(0.5 * (closed[0] + closed[0].transpose()));
        report.alpha = eig.value;
        report.passed = eig.value > 0.0;
        report.exhaustive = true;
        report.witness.assign(static_cast<std::size_t>(ens.size()), eig.vector);
        return report;
    }

    // Sample-dependent closed loop: the fluctuation component enters the form
    // linearly, so the inequality cannot hold for all v. Look for an explicit
    // violation with a seeded random search and report the worst Rayleigh value.
    RngState rng{0x7A51CEED5EEDULL};
    double worst = std::numeric_limits<double>::infinity();
    std::vector<Vector> worst_v;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<Vector> v(static_cast<std::size_t>(ens.size()));
        double sq = 0.0;
        for (auto& vi : v) {
            vi = Vector(ens.n);
            for (Eigen::Index c = 0; c < ens.n; ++c)
                vi[c] = 2.0 * rng_next_uniform(rng) - 1.0;
            sq += vi.squaredNorm();
        }
        Vector mean_v = Vector::Zero(ens.n);
        Vector mean_gv = Vector::Zero(ens.n);
        for (std::size_t i = 0; i < v.size(); ++i) {
            mean_v.noalias() += ens.samples[i].weight * v[i];
            mean_gv.noalias() += ens.samples[i].weight * (closed[i] * v[i]);
        }
        const double denom = mean_v.squaredNorm();
        if (denom < 1e-12 * sq) continue;
        const double rayleigh = mean_gv.dot(mean_v) / denom;
        if (rayleigh < worst) {
            worst = rayleigh;
            worst_v = std::move(v);
        }
    }
    report.alpha = worst;
    report.passed = worst > 0.0; // heuristic only; never a certificate
    report.exhaustive = false;
    report.witness = std::move(worst_v);
    return report;
}

DecayCheck verify_average_decay(const Ensemble& ens, const FeedbackSpec& K,
                                const TimeGrid& grid, const std::vector<Vector>& x0,
                                double alpha) {
    const EnsembleTrajectory traj = closed_loop_forward(ens, K.expanded(ens.size()), grid, x0);
    const double mean_x0_sq = expect(ens, x0).squaredNorm();

    DecayCheck out;
    out.min_slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.n_nodes(); ++k) {
        std::vector<Vector> xk(static_cast<std::size_t>(ens.size()));
        for (Eigen::Index i = 0; i < ens.size(); ++i)
            xk[static_cast<std::size_t>(i)] =
                traj.states[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        const double value = expect(ens, xk).squaredNorm();
        const double bound = std::exp(-alpha * grid.node(k)) * mean_x0_sq + 1e-10;
        out.min_slack = std::min(out.min_slack, bound - value);
    }
    out.holds = out.min_slack >= 0.0;
    return out;
}

CheckReport scan_scalar_feedback(const Ensemble& ens, ScanTarget which,
                                 const std::vector<ScanRange>& ranges) {
    ens.validate();
    const Eigen::Index rows = ens.n;
    const Eigen::Index cols = which == ScanTarget::A2 ? ens.m : ens.p;
    const Eigen::Index entries_per_gain = rows * cols;
    const Eigen::Index total_entries = entries_per_gain * ens.size();
    if (total_entries > 4)
        throw TooManyGainEntries("scan_scalar_feedback: " + std::to_string(total_entries) +
                                 " gain entries exceed the supported maximum of 4");
    if (ranges.size() != 1 && ranges.size() != static_cast<std::size_t>(total_entries))
        throw DimensionMismatch("scan_scalar_feedback: need one range or one per entry");

    std::vector<std::vector<double>> grids(static_cast<std::size_t>(total_entries));
    for (Eigen::Index e = 0; e < total_entries; ++e) {
        const ScanRange& r =
            ranges.size() == 1 ? ranges[0] : ranges[static_cast<std::size_t>(e)];
        if (!(r.step > 0.0) || !std::isfinite(r.lo) || !std::isfinite(r.hi) || r.hi < r.lo)
            throw DimensionMismatch("scan_scalar_feedback: bad range");
        std::vector<double>& g = grids[static_cast<std::size_t>(e)];
        const int count = static_cast<int>(std::floor((r.hi - r.lo) / r.step + 1e-9)) + 1;
        g.reserve(static_cast<std::size_t>(count));
        for (int j = 0; j < count; ++j) g.push_back(r.lo + j * r.step);
    }

    std::size_t total_points = 1;
    for (const auto& g : grids) total_points *= g.size();

    const auto gains_at = [&](std::size_t flat) {
        std::vector<Matrix> gains(static_cast<std::size_t>(ens.size()),
                                  Matrix::Zero(rows, cols));
        // Lexicographic decode, first entry outermost.
        for (Eigen::Index e = total_entries - 1; e >= 0; --e) {
            const auto& g = grids[static_cast<std::size_t>(e)];
            const double value = g[flat % g.size()];
            flat /= g.size();
            const Eigen::Index sample = e / entries_per_gain;
            const Eigen::Index within = e % entries_per_gain;
            gains[static_cast<std::size_t>(sample)](within / cols, within % cols) = value;
        }
        return gains;
    };
    const auto run_check = [&](const FeedbackSpec& spec) {
        switch (which) {
        case ScanTarget::A1: return check_A1(ens, spec);
        case ScanTarget::A2: return check_A2(ens, spec, A2Variant::Single);
        case ScanTarget::A0: return check_A0(ens, spec);
        }
        throw DimensionMismatch("scan_scalar_feedback: unknown target");
    };

    std::vector<double> alphas(total_points);
    parallel_for(static_cast<int>(total_points), [&](int idx) {
        alphas[static_cast<std::size_t>(idx)] =
            run_check(FeedbackSpec::per_sample(gains_at(static_cast<std::size_t>(idx)))).alpha;
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < total_points; ++i)
        if (alphas[i] > alphas[best]) best = i; // first in scan order wins ties

    CheckReport report = run_check(FeedbackSpec::per_sample(gains_at(best)));
    report.exhaustive = false; // a grid scan is a heuristic falsifier, not a proof
    return report;
}

} // namespace turnpike
