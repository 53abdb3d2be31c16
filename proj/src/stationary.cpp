#include "turnpike/stationary.hpp"

#include "turnpike/parallel.hpp"

namespace turnpike {

StationarySolution solve_stationary(const Ensemble& ens, const Vector& z) {
    ens.validate();
    if (z.size() != ens.p)
        throw DimensionMismatch("solve_stationary: target z must have dimension p");

    // Per-sample G_i = A_i^{-1} B_i; parallel solves, fixed-order accumulation of M.
    std::vector<Matrix> G(ens.samples.size());
    std::vector<int> singular(ens.samples.size(), 0);
    parallel_for(static_cast<int>(ens.samples.size()), [&](int i) {
        const ParameterSample& s = ens.samples[static_cast<std::size_t>(i)];
        Matrix Gi(ens.n, ens.m);
        try {
            for (Eigen::Index c = 0; c < ens.m; ++c)
                Gi.col(c) = lu_solve(s.A, s.B.col(c));
        } catch (const SingularMatrix&) {
            singular[static_cast<std::size_t>(i)] = 1;
            return;
        }
        G[static_cast<std::size_t>(i)] = std::move(Gi);
    });
    for (std::size_t i = 0; i < singular.size(); ++i) {
        if (singular[i])
            throw SingularSample(
                static_cast<int>(i),
                "solve_stationary: sample " + std::to_string(i) +
                    " has singular A; the constraint A(w)x = B(w)u is only solvable "
                    "for controls with B(w)u in Range(A(w))");
    }

    StationarySolution sol;
    sol.M = Matrix::Zero(ens.p, ens.m);
    for (std::size_t i = 0; i < ens.samples.size(); ++i)
        sol.M.noalias() += ens.samples[i].weight * (ens.samples[i].C * G[i]);

    const Matrix normal = Matrix::Identity(ens.m, ens.m) + sol.M.transpose() * sol.M;
    sol.u_s = lu_solve(normal, sol.M.transpose() * z);

    sol.x_s.resize(ens.samples.size());
    for (std::size_t i = 0; i < ens.samples.size(); ++i) sol.x_s[i] = G[i] * sol.u_s;

    const Vector misfit = sol.M * sol.u_s - z; // = E[C x_s] - z
    sol.phi_s.resize(ens.samples.size());
    for (std::size_t i = 0; i < ens.samples.size(); ++i) {
        const ParameterSample& s = ens.samples[i];
        sol.phi_s[i] = lu_solve(s.A.transpose(), s.C.transpose() * misfit);
    }

    sol.cost = 0.5 * (sol.u_s.squaredNorm() + misfit.squaredNorm());
    return sol;
}

double consistency_residual(const StationarySolution& sol, const Ensemble& ens) {
    Vector acc = sol.u_s;
    for (std::size_t i = 0; i < ens.samples.size(); ++i)
        acc.noalias() += ens.samples[i].weight * (ens.samples[i].B.transpose() * sol.phi_s[i]);
    return acc.norm();
}

} // namespace turnpike
