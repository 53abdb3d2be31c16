#include "turnpike/dynamics.hpp"

#include <cmath>

#include "turnpike/parallel.hpp"

namespace turnpike {

TimeGrid::TimeGrid(double horizon, int steps) : T(horizon), n_steps(steps) {
    if (!(T > 0.0)) throw DimensionMismatch("time grid: horizon must be positive");
    if (n_steps < 2) throw DimensionMismatch("time grid: need at least 2 steps");
}

ControlTrajectory ControlTrajectory::zero(const TimeGrid& grid, Eigen::Index m) {
    ControlTrajectory u;
    u.values.assign(static_cast<std::size_t>(grid.n_nodes()), Vector::Zero(m));
    return u;
}

namespace {

Eigen::PartialPivLU<Matrix> factor_step_matrix(const Matrix& A, double h, Scheme scheme,
                                               int sample) {
    const Eigen::Index n = A.rows();
    const Matrix P = scheme == Scheme::ImplicitMidpoint
                         ? Matrix(Matrix::Identity(n, n) + 0.5 * h * A)
                         : Matrix(Matrix::Identity(n, n) + h * A);
    Eigen::PartialPivLU<Matrix> lu(P);
    const double floor = 1e-14 * std::max(P.cwiseAbs().maxCoeff(), 1e-300);
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() <= floor)
        throw SingularStepMatrix("integrator: step matrix singular for sample " +
                                 std::to_string(sample) + "; try a finer grid");
    return lu;
}

void check_state_dims(const Ensemble& ens, const std::vector<Vector>& x0) {
    if (x0.size() != ens.samples.size())
        throw DimensionMismatch("integrator: one initial state per sample required");
    for (const Vector& v : x0)
        if (v.size() != ens.n || !v.allFinite())
            throw DimensionMismatch("integrator: bad initial state");
}

} // namespace

EnsembleTrajectory integrate_forward(const Ensemble& ens, const TimeGrid& grid,
                                     const ControlTrajectory& u,
                                     const std::vector<Vector>& x0, Scheme scheme) {
    check_state_dims(ens, x0);
    if (u.n_nodes() != grid.n_nodes())
        throw GridMismatch("integrate_forward: control not sampled on this grid");
    for (const Vector& uk : u.values)
        if (uk.size() != ens.m)
            throw DimensionMismatch("integrate_forward: control dimension mismatch");

    const double h = grid.h();
    const int n_nodes = grid.n_nodes();
    EnsembleTrajectory traj;
    traj.states.assign(ens.samples.size(), {});

    parallel_for(static_cast<int>(ens.samples.size()), [&](int i) {
        const ParameterSample& s = ens.samples[static_cast<std::size_t>(i)];
        auto& xs = traj.states[static_cast<std::size_t>(i)];
        xs.assign(static_cast<std::size_t>(n_nodes), Vector());
        xs[0] = x0[static_cast<std::size_t>(i)];
        const auto lu = factor_step_matrix(s.A, h, scheme, i);
        if (scheme == Scheme::ImplicitMidpoint) {
            const Matrix N = Matrix::Identity(ens.n, ens.n) - 0.5 * h * s.A;
            for (int k = 0; k + 1 < n_nodes; ++k) {
                const Vector u_mid =
                    0.5 * (u.values[static_cast<std::size_t>(k)] +
                           u.values[static_cast<std::size_t>(k + 1)]);
                xs[static_cast<std::size_t>(k + 1)] =
                    lu.solve(N * xs[static_cast<std::size_t>(k)] + h * (s.B * u_mid));
            }
        } else {
            for (int k = 0; k + 1 < n_nodes; ++k) {
                xs[static_cast<std::size_t>(k + 1)] =
                    lu.solve(xs[static_cast<std::size_t>(k)] +
                             h * (s.B * u.values[static_cast<std::size_t>(k + 1)]));
            }
        }
    });
    return traj;
}

EnsembleTrajectory integrate_adjoint(const Ensemble& ens, const TimeGrid& grid,
                                     const EnsembleTrajectory& x, const Vector& z,
                                     const std::vector<Vector>& phi_T, Scheme scheme) {
    check_state_dims(ens, phi_T);
    if (x.n_samples() != static_cast<int>(ens.samples.size()) ||
        x.n_nodes() != grid.n_nodes())
        throw GridMismatch("integrate_adjoint: state trajectory not on this grid");
    if (z.size() != ens.p)
        throw DimensionMismatch("integrate_adjoint: target dimension mismatch");

    const double h = grid.h();
    const int n_nodes = grid.n_nodes();

    // E[C x] at every node, reduced in fixed sample order before the parallel
    // backward sweeps.
    std::vector<Vector> mean_obs(static_cast<std::size_t>(n_nodes), Vector::Zero(ens.p));
    for (std::size_t i = 0; i < ens.samples.size(); ++i) {
        const ParameterSample& s = ens.samples[i];
        for (int k = 0; k < n_nodes; ++k)
            mean_obs[static_cast<std::size_t>(k)].noalias() +=
                s.weight * (s.C * x.states[i][static_cast<std::size_t>(k)]);
    }

    EnsembleTrajectory traj;
    traj.states.assign(ens.samples.size(), {});

    parallel_for(static_cast<int>(ens.samples.size()), [&](int i) {
        const ParameterSample& s = ens.samples[static_cast<std::size_t>(i)];
        auto& ph = traj.states[static_cast<std::size_t>(i)];
        ph.assign(static_cast<std::size_t>(n_nodes), Vector());
        ph[static_cast<std::size_t>(n_nodes - 1)] = phi_T[static_cast<std::size_t>(i)];
        const Matrix At = s.A.transpose();
        const auto lu = factor_step_matrix(At, h, scheme, i);
        if (scheme == Scheme::ImplicitMidpoint) {
            const Matrix N = Matrix::Identity(ens.n, ens.n) - 0.5 * h * At;
            for (int k = n_nodes - 2; k >= 0; --k) {
                const Vector src =
                    0.5 * (mean_obs[static_cast<std::size_t>(k)] +
                           mean_obs[static_cast<std::size_t>(k + 1)]) - z;
                ph[static_cast<std::size_t>(k)] =
                    lu.solve(N * ph[static_cast<std::size_t>(k + 1)] +
                             h * (s.C.transpose() * src));
            }
        } else {
            for (int k = n_nodes - 2; k >= 0; --k) {
                const Vector src = mean_obs[static_cast<std::size_t>(k)] - z;
                ph[static_cast<std::size_t>(k)] =
                    lu.solve(ph[static_cast<std::size_t>(k + 1)] +
                             h * (s.C.transpose() * src));
            }
        }
    });
    return traj;
}

EnsembleTrajectory closed_loop_forward(const Ensemble& ens, const std::vector<Matrix>& K,
                                       const TimeGrid& grid, const std::vector<Vector>& x0,
                                       Scheme scheme) {
    if (K.size() != ens.samples.size())
        throw DimensionMismatch("closed_loop_forward: one gain per sample required");
    Ensemble closed = ens;
    for (std::size_t i = 0; i < closed.samples.size(); ++i) {
        const Matrix& Ki = K[i];
        if (Ki.rows() != ens.n || Ki.cols() != ens.p)
            throw DimensionMismatch("closed_loop_forward: gain must be n x p");
        closed.samples[i].A += Ki * ens.samples[i].C;
    }
    return integrate_forward(closed, grid, ControlTrajectory::zero(grid, ens.m), x0,
                             scheme);
}

} // namespace turnpike
