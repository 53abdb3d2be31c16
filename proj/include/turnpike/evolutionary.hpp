#pragma once

#include "turnpike/dynamics.hpp"

namespace turnpike {

// min J(u) = 1/2 Trap[ |u|^2 + |E[Cx] - z|^2 ] + (x(T,.), phi_T)_w
// subject to x_t + A(w)x = B(w)u, x(0,w) = x0(w).
struct EvolutionaryProblem {
    Ensemble ens;
    TimeGrid grid;
    std::vector<Vector> x0;    // per sample
    Vector z;                  // dim p
    std::vector<Vector> phi_T; // per sample
    Scheme scheme = Scheme::ImplicitMidpoint;

    void validate() const;
};

enum class SolveMethod { BbArmijo, Cg };

struct SolverOptions {
    double tol_rel_grad = 1e-8;
    int max_iters = 5000;
    SolveMethod method = SolveMethod::BbArmijo;
    double armijo_c = 1e-4;
    double bb_step_min = 1e-8;
    double bb_step_max = 1e8;
};

struct EvolutionarySolution {
    ControlTrajectory u;
    EnsembleTrajectory x;
    EnsembleTrajectory phi; // adjoint trajectory from integrate_adjoint
    double cost = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Discrete cost: trapezoidal quadrature of the running terms on the grid
/// nodes plus the terminal pairing (plus sign).
double cost(const EvolutionaryProblem& p, const ControlTrajectory& u);

/// Exact gradient of the discrete cost under the h-weighted control inner
/// product (u,v)_h = sum_k h <u_k, v_k>. Computed with the transpose of the
/// discrete forward map, so central finite differences reproduce it to
/// roundoff.
ControlTrajectory gradient(const EvolutionaryProblem& p, const ControlTrajectory& u);

/// h-weighted norm used for gradient stopping tests.
double control_norm_h(const TimeGrid& grid, const ControlTrajectory& u);

/// Barzilai-Borwein steps safeguarded by Armijo backtracking, starting from
/// u = 0. Stops when |g|_h <= tol_rel_grad * max(1, |g(0)|_h). On iteration
/// exhaustion returns the best iterate with converged = false.
EvolutionarySolution solve_evolutionary(const EvolutionaryProblem& p,
                                        const SolverOptions& opts);

/// Independent cross-check: matrix-free conjugate gradient on H u = -b with
/// H u = gradient(u) - gradient(0), b = gradient(0). Relative residual 1e-12.
/// Throws CgStalled when the residual cannot be driven down.
EvolutionarySolution solve_kkt_oracle(const EvolutionaryProblem& p,
                                      const SolverOptions& opts);

} // namespace turnpike
