#pragma once

#include <vector>

#include "turnpike/ensemble.hpp"

namespace turnpike {

struct TimeGrid {
    double T = 0.0;
    int n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps);

    double h() const { return T / n_steps; }
    int n_nodes() const { return n_steps + 1; }
    double node(int k) const { return T * static_cast<double>(k) / n_steps; }
};

// Parameter-independent control sampled at the grid nodes (n_steps + 1 values).
struct ControlTrajectory {
    std::vector<Vector> values;

    int n_nodes() const { return static_cast<int>(values.size()); }
    static ControlTrajectory zero(const TimeGrid& grid, Eigen::Index m);
};

// Per-sample state (or adjoint) trajectories on a shared grid: states[i][k].
struct EnsembleTrajectory {
    std::vector<std::vector<Vector>> states;

    int n_samples() const { return static_cast<int>(states.size()); }
    int n_nodes() const { return states.empty() ? 0 : static_cast<int>(states[0].size()); }
};

enum class Scheme { ImplicitMidpoint, BackwardEuler };

/// Integrates x_t + A(w)x = B(w)u per sample. Implicit midpoint:
///   (I + h/2 A_i) x_{k+1} = (I - h/2 A_i) x_k + h B_i (u_k + u_{k+1})/2,
/// with the step matrix factored once per sample. Backward Euler uses the
/// right-node control instead of the midpoint average.
EnsembleTrajectory integrate_forward(const Ensemble& ens, const TimeGrid& grid,
                                     const ControlTrajectory& u,
                                     const std::vector<Vector>& x0,
                                     Scheme scheme = Scheme::ImplicitMidpoint);

/// Integrates the adjoint -phi_t + A*(w)phi = C*(w)(E[Cx(t,.)] - z) backward
/// from phi(T,.) = phi_T by implicit midpoint on the reversed equation; the
/// source at step midpoints uses E[C (x_k + x_{k+1})/2] - z.
EnsembleTrajectory integrate_adjoint(const Ensemble& ens, const TimeGrid& grid,
                                     const EnsembleTrajectory& x, const Vector& z,
                                     const std::vector<Vector>& phi_T,
                                     Scheme scheme = Scheme::ImplicitMidpoint);

/// Forward integration of x_t + (A(w) + K(w)C(w))x = 0.
EnsembleTrajectory closed_loop_forward(const Ensemble& ens,
                                       const std::vector<Matrix>& K,
                                       const TimeGrid& grid,
                                       const std::vector<Vector>& x0,
                                       Scheme scheme = Scheme::ImplicitMidpoint);

} // namespace turnpike
