#include "turnpike/evolutionary.hpp"

#include <algorithm>
#include <cmath>

#include "turnpike/parallel.hpp"

namespace turnpike {

namespace {

double trap_weight(int k, int n_steps) {
    return (k == 0 || k == n_steps) ? 0.5 : 1.0;
}

// E[C x_k] - z at every node, reduced in fixed sample order.
std::vector<Vector> tracking_errors(const EvolutionaryProblem& p,
                                    const EnsembleTrajectory& x) {
    const int n_nodes = p.grid.n_nodes();
    std::vector<Vector> e(static_cast<std::size_t>(n_nodes), Vector::Zero(p.ens.p));
    for (std::size_t i = 0; i < p.ens.samples.size(); ++i) {
        const ParameterSample& s = p.ens.samples[i];
        for (int k = 0; k < n_nodes; ++k)
            e[static_cast<std::size_t>(k)].noalias() +=
                s.weight * (s.C * x.states[i][static_cast<std::size_t>(k)]);
    }
    for (auto& ek : e) ek -= p.z;
    return e;
}

ControlTrajectory axpy(const ControlTrajectory& u, double a, const ControlTrajectory& v) {
    ControlTrajectory out = u;
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += a * v.values[k];
    return out;
}

double dot_h(const TimeGrid& grid, const ControlTrajectory& a, const ControlTrajectory& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) acc += a.values[k].dot(b.values[k]);
    return grid.h() * acc;
}

} // namespace

void EvolutionaryProblem::validate() const {
    ens.validate();
    if (!(grid.T > 0.0) || grid.n_steps < 2)
        throw DimensionMismatch("problem: invalid time grid");
    if (x0.size() != ens.samples.size() || phi_T.size() != ens.samples.size())
        throw DimensionMismatch("problem: x0 and phi_T must hold one vector per sample");
    for (const Vector& v : x0)
        if (v.size() != ens.n || !v.allFinite())
            throw DimensionMismatch("problem: bad x0 entry");
    for (const Vector& v : phi_T)
        if (v.size() != ens.n || !v.allFinite())
            throw DimensionMismatch("problem: bad phi_T entry");
    if (z.size() != ens.p || !z.allFinite())
        throw DimensionMismatch("problem: target z must have dimension p");
}

double control_norm_h(const TimeGrid& grid, const ControlTrajectory& u) {
    return std::sqrt(std::max(0.0, dot_h(grid, u, u)));
}

double cost(const EvolutionaryProblem& p, const ControlTrajectory& u) {
    const EnsembleTrajectory x = integrate_forward(p.ens, p.grid, u, p.x0, p.scheme);
    const std::vector<Vector> e = tracking_errors(p, x);
    const double h = p.grid.h();
    double running = 0.0;
    for (int k = 0; k < p.grid.n_nodes(); ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        running += trap_weight(k, p.grid.n_steps) *
                   (u.values[ks].squaredNorm() + e[ks].squaredNorm());
    }
    double terminal = 0.0;
    for (std::size_t i = 0; i < p.ens.samples.size(); ++i)
        terminal += p.ens.samples[i].weight *
                    x.states[i][static_cast<std::size_t>(p.grid.n_steps)].dot(p.phi_T[i]);
    return 0.5 * h * running + terminal;
}

// Multiplier recursion for the transpose of the discrete forward map. With
// P = I + (h/2)A, N = I - (h/2)A (midpoint) the multipliers satisfy
//   P^T l_n = -(phi_T + (h/2) C^T e_n),
//   P^T l_k = N^T l_{k+1} - h C^T e_k,        0 < k < n,
// and the gradient of the discrete cost in the h-weighted metric is
//   g_0 = (1/2)(u_0 - E[B^T l_1]),
//   g_j = u_j - E[B^T (l_j + l_{j+1})]/2,     0 < j < n,
//   g_n = (1/2)(u_n - E[B^T l_n]).
// Backward Euler analogously with P = I + hA and node sources.
ControlTrajectory gradient(const EvolutionaryProblem& p, const ControlTrajectory& u) {
    const EnsembleTrajectory x = integrate_forward(p.ens, p.grid, u, p.x0, p.scheme);
    const std::vector<Vector> e = tracking_errors(p, x);
    const double h = p.grid.h();
    const int n_nodes = p.grid.n_nodes();
    const int last = p.grid.n_steps;

    // bl[i][k] = B_i^T lambda_i(t_k); slot 0 stays zero (lambda_0 is unused).
    std::vector<std::vector<Vector>> bl(p.ens.samples.size());
    parallel_for(static_cast<int>(p.ens.samples.size()), [&](int i) {
        const ParameterSample& s = p.ens.samples[static_cast<std::size_t>(i)];
        const Matrix At = s.A.transpose();
        const Matrix P = p.scheme == Scheme::ImplicitMidpoint
                             ? Matrix(Matrix::Identity(p.ens.n, p.ens.n) + 0.5 * h * At)
                             : Matrix(Matrix::Identity(p.ens.n, p.ens.n) + h * At);
        Eigen::PartialPivLU<Matrix> lu(P);
        auto& bli = bl[static_cast<std::size_t>(i)];
        bli.assign(static_cast<std::size_t>(n_nodes), Vector::Zero(p.ens.m));

        Vector lam = lu.solve(
            (-(p.phi_T[static_cast<std::size_t>(i)] +
               0.5 * h * (s.C.transpose() * e[static_cast<std::size_t>(last)])))
                .eval());
        bli[static_cast<std::size_t>(last)] = s.B.transpose() * lam;
        if (p.scheme == Scheme::ImplicitMidpoint) {
            const Matrix Nt = Matrix::Identity(p.ens.n, p.ens.n) - 0.5 * h * At;
            for (int k = last - 1; k >= 1; --k) {
                lam = lu.solve(Nt * lam -
                               h * (s.C.transpose() * e[static_cast<std::size_t>(k)]));
                bli[static_cast<std::size_t>(k)] = s.B.transpose() * lam;
            }
        } else {
            for (int k = last - 1; k >= 1; --k) {
                lam = lu.solve(
                    (lam - h * (s.C.transpose() * e[static_cast<std::size_t>(k)])).eval());
                bli[static_cast<std::size_t>(k)] = s.B.transpose() * lam;
            }
        }
    });

    // Fixed-order reduction over samples.
    std::vector<Vector> mean_bl(static_cast<std::size_t>(n_nodes), Vector::Zero(p.ens.m));
    for (std::size_t i = 0; i < bl.size(); ++i)
        for (int k = 1; k < n_nodes; ++k)
            mean_bl[static_cast<std::size_t>(k)].noalias() +=
                p.ens.samples[i].weight * bl[i][static_cast<std::size_t>(k)];

    ControlTrajectory g = ControlTrajectory::zero(p.grid, p.ens.m);
    if (p.scheme == Scheme::ImplicitMidpoint) {
        g.values[0] = 0.5 * (u.values[0] - mean_bl[1]);
        for (int j = 1; j < last; ++j)
            g.values[static_cast<std::size_t>(j)] =
                u.values[static_cast<std::size_t>(j)] -
                0.5 * (mean_bl[static_cast<std::size_t>(j)] +
                       mean_bl[static_cast<std::size_t>(j + 1)]);
        g.values[static_cast<std::size_t>(last)] =
            0.5 * (u.values[static_cast<std::size_t>(last)] -
                   mean_bl[static_cast<std::size_t>(last)]);
    } else {
        g.values[0] = 0.5 * u.values[0];
        for (int j = 1; j <= last; ++j)
            g.values[static_cast<std::size_t>(j)] =
                trap_weight(j, last) * u.values[static_cast<std::size_t>(j)] -
                mean_bl[static_cast<std::size_t>(j)];
    }
    return g;
}

namespace {

EvolutionarySolution finish_solution(const EvolutionaryProblem& p, ControlTrajectory u,
                                     double J, double grad_norm, int iterations,
                                     bool converged) {
    EvolutionarySolution sol;
    sol.x = integrate_forward(p.ens, p.grid, u, p.x0, p.scheme);
    sol.phi = integrate_adjoint(p.ens, p.grid, sol.x, p.z, p.phi_T, p.scheme);
    sol.u = std::move(u);
    sol.cost = J;
    sol.grad_norm = grad_norm;
    sol.iterations = iterations;
    sol.converged = converged;
    return sol;
}

} // namespace

EvolutionarySolution solve_evolutionary(const EvolutionaryProblem& p,
                                        const SolverOptions& opts) {
    p.validate();
    if (!(opts.tol_rel_grad > 0.0))
        throw DimensionMismatch("solver: tol_rel_grad must be positive");

    ControlTrajectory u = ControlTrajectory::zero(p.grid, p.ens.m);
    ControlTrajectory g = gradient(p, u);
    double J = cost(p, u);
    double gnorm = control_norm_h(p.grid, g);
    const double threshold = opts.tol_rel_grad * std::max(1.0, gnorm);

    ControlTrajectory best_u = u;
    double best_J = J;
    double best_gnorm = gnorm;

    if (gnorm <= threshold) return finish_solution(p, u, J, gnorm, 0, true);

    // First step: exact minimizing step along -g (one extra gradient solve).
    double step;
    {
        const ControlTrajectory g_trial = gradient(p, axpy(u, -1.0, g));
        ControlTrajectory Hd = g_trial; // H(-g) = gradient(u - g) - gradient(u)
        for (std::size_t k = 0; k < Hd.values.size(); ++k) Hd.values[k] -= g.values[k];
        const double curvature = -dot_h(p.grid, g, Hd); // (g, Hg)_h
        step = curvature > 0.0 ? gnorm * gnorm / curvature : 1.0;
    }

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        step = std::clamp(step, opts.bb_step_min, opts.bb_step_max);

        // Armijo backtracking on the exact quadratic cost.
        double t = step;
        ControlTrajectory u_next;
        double J_next = 0.0;
        bool accepted = false;
        for (int back = 0; back < 60; ++back) {
            u_next = axpy(u, -t, g);
            J_next = cost(p, u_next);
            if (J_next <= J - opts.armijo_c * t * gnorm * gnorm) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted && J_next >= J)
            return finish_solution(p, std::move(best_u), best_J, best_gnorm, iter, false);

        const ControlTrajectory g_next = gradient(p, u_next);
        // BB1 step from s = -t g, y = g_next - g.
        double sy = 0.0, ss = 0.0;
        for (std::size_t k = 0; k < g.values.size(); ++k) {
            const Vector s_k = -t * g.values[k];
            ss += s_k.squaredNorm();
            sy += s_k.dot(g_next.values[k] - g.values[k]);
        }
        step = sy > 0.0 ? ss / sy : t;

        u = std::move(u_next);
        g = g_next;
        J = J_next;
        gnorm = control_norm_h(p.grid, g);
        if (J <= best_J) {
            best_u = u;
            best_J = J;
            best_gnorm = gnorm;
        }
        if (gnorm <= threshold) return finish_solution(p, std::move(u), J, gnorm, iter, true);
    }
    return finish_solution(p, std::move(best_u), best_J, best_gnorm, opts.max_iters, false);
}

EvolutionarySolution solve_kkt_oracle(const EvolutionaryProblem& p,
                                      const SolverOptions& opts) {
    (void)opts;
    p.validate();

    const ControlTrajectory b = gradient(p, ControlTrajectory::zero(p.grid, p.ens.m));
    const double b_norm = control_norm_h(p.grid, b);
    const auto apply_hessian = [&](const ControlTrajectory& v) {
        ControlTrajectory Hv = gradient(p, v);
        for (std::size_t k = 0; k < Hv.values.size(); ++k) Hv.values[k] -= b.values[k];
        return Hv;
    };

    ControlTrajectory u = ControlTrajectory::zero(p.grid, p.ens.m);
    int iterations = 0;
    if (b_norm > 0.0) {
        ControlTrajectory r = u; // r = -b - H*0
        for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] = -b.values[k];
        ControlTrajectory dir = r;
        double rr = dot_h(p.grid, r, r);
        const double target = 1e-12 * b_norm;
        const int max_cg = std::max(200, 10 * p.grid.n_nodes() * static_cast<int>(p.ens.m));
        bool done = false;
        for (int it = 1; it <= max_cg; ++it) {
            const ControlTrajectory Hd = apply_hessian(dir);
            const double curvature = dot_h(p.grid, dir, Hd);
            if (!(curvature > 0.0))
                throw CgStalled("kkt oracle: non-positive curvature encountered");
            const double a = rr / curvature;
            for (std::size_t k = 0; k < u.values.size(); ++k) {
                u.values[k] += a * dir.values[k];
                r.values[k] -= a * Hd.values[k];
            }
            const double rr_next = dot_h(p.grid, r, r);
            iterations = it;
            if (std::sqrt(rr_next) <= target) {
                done = true;
                break;
            }
            const double beta = rr_next / rr;
            for (std::size_t k = 0; k < dir.values.size(); ++k)
                dir.values[k] = r.values[k] + beta * dir.values[k];
            rr = rr_next;
        }
        if (!done) throw CgStalled("kkt oracle: residual did not reach 1e-12 relative");
    }

    const double J = cost(p, u);
    const double gnorm = control_norm_h(p.grid, gradient(p, u));
    return finish_solution(p, std::move(u), J, gnorm, iterations, true);
}

} // namespace turnpike
