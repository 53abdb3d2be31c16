#include "turnpike/turnpike_report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace turnpike {

TurnpikeReport turnpike_distances(const EvolutionarySolution& evo,
                                  const StationarySolution& stat,
                                  const Ensemble& ens, const TimeGrid& grid) {
    if (evo.u.n_nodes() != grid.n_nodes() || evo.x.n_nodes() != grid.n_nodes() ||
        evo.phi.n_nodes() != grid.n_nodes())
        throw GridMismatch("turnpike_distances: solution not sampled on this grid");
    if (static_cast<Eigen::Index>(stat.x_s.size()) != ens.size())
        throw GridMismatch("turnpike_distances: stationary solution ensemble mismatch");

    TurnpikeReport report;
    report.grid = grid;
    const int n_nodes = grid.n_nodes();
    report.d_state.resize(static_cast<std::size_t>(n_nodes));
    report.d_adjoint.resize(static_cast<std::size_t>(n_nodes));
    report.d_control.resize(static_cast<std::size_t>(n_nodes));
    report.d_total.resize(static_cast<std::size_t>(n_nodes));

    std::vector<Vector> diff(static_cast<std::size_t>(ens.size()));
    for (int k = 0; k < n_nodes; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = evo.x.states[i][ks] - stat.x_s[i];
        report.d_state[ks] = weighted_norm(ens, diff);
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = evo.phi.states[i][ks] - stat.phi_s[i];
        report.d_adjoint[ks] = weighted_norm(ens, diff);
        report.d_control[ks] = (evo.u.values[ks] - stat.u_s).norm();
        report.d_total[ks] = report.d_state[ks] + report.d_adjoint[ks] + report.d_control[ks];
    }
    return report;
}

namespace {

double envelope(double t, double T, double delta) {
    return std::exp(-delta * t) + std::exp(-delta * (T - t));
}

// Sum of squared residuals of log d against log(K e(delta,t)) with log K
// profiled out in closed form.
double profiled_sse(const std::vector<double>& ts, const std::vector<double>& logs,
                    double T, double delta) {
    double mean_resid = 0.0;
    std::vector<double> resid(ts.size());
    for (std::size_t j = 0; j < ts.size(); ++j) {
        resid[j] = logs[j] - std::log(envelope(ts[j], T, delta));
        mean_resid += resid[j];
    }
    mean_resid /= static_cast<double>(ts.size());
    double sse = 0.0;
    for (double r : resid) sse += (r - mean_resid) * (r - mean_resid);
    return sse;
}

} // namespace

EnvelopeFit fit_envelope(TurnpikeReport& report) {
    const TimeGrid& grid = report.grid;
    if (!(grid.T > 2.0))
        throw DimensionMismatch("fit_envelope: requires T > 2");

    const double t_lo = report.window_lo * grid.T;
    const double t_hi = report.window_hi * grid.T;

    // Usable nodes: inside the window, positive, and strictly decreasing.
    std::vector<double> ts, logs;
    for (int k = 0; k + 1 < grid.n_nodes(); ++k) {
        const double t = grid.node(k);
        const double d = report.d_total[static_cast<std::size_t>(k)];
        if (t < t_lo || t > t_hi) continue;
        if (!(d > 0.0)) continue;
        if (!(report.d_total[static_cast<std::size_t>(k + 1)] < d)) continue;
        ts.push_back(t);
        logs.push_back(std::log(d));
    }

    EnvelopeFit fit;
    fit.degenerate = ts.size() < 5;

    double delta = 0.0;
    if (!fit.degenerate) {
        // Least-squares slope of -log d over the usable nodes.
        double mt = 0.0, my = 0.0;
        for (std::size_t j = 0; j < ts.size(); ++j) {
            mt += ts[j];
            my += -logs[j];
        }
        mt /= static_cast<double>(ts.size());
        my /= static_cast<double>(ts.size());
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < ts.size(); ++j) {
            num += (ts[j] - mt) * (-logs[j] - my);
            den += (ts[j] - mt) * (ts[j] - mt);
        }
        double slope = den > 0.0 ? num / den : 0.0;
        if (slope <= 0.0) {
            fit.degenerate = true;
        } else {
            // Refine: the raw slope is biased by the reflected tail of the
            // two-sided envelope, so minimize the profiled log-residual in
            // delta by golden section around the slope estimate.
            double lo = slope / 8.0;
            double hi = 8.0 * slope;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = lo, b = hi;
            double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
            double f1 = profiled_sse(ts, logs, grid.T, c1);
            double f2 = profiled_sse(ts, logs, grid.T, c2);
            for (int it = 0; it < 200 && (b - a) > 1e-12 * hi; ++it) {
                if (f1 <= f2) {
                    b = c2;
                    c2 = c1;
                    f2 = f1;
                    c1 = b - gr * (b - a);
                    f1 = profiled_sse(ts, logs, grid.T, c1);
                } else {
                    a = c1;
                    c1 = c2;
                    f1 = f2;
                    c2 = a + gr * (b - a);
                    f2 = profiled_sse(ts, logs, grid.T, c2);
                }
            }
            delta = 0.5 * (a + b);
        }
    }
    delta = std::max(0.0, delta);

    // K by envelope domination: max ratio over all nodes, so the residual is
    // non-positive by construction.
    double K = 0.0;
    for (int k = 0; k < grid.n_nodes(); ++k) {
        const double d = report.d_total[static_cast<std::size_t>(k)];
        if (d <= 0.0) continue;
        K = std::max(K, d / envelope(grid.node(k), grid.T, delta));
    }
    double max_residual = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.n_nodes(); ++k)
        max_residual = std::max(max_residual,
                                report.d_total[static_cast<std::size_t>(k)] -
                                    K * envelope(grid.node(k), grid.T, delta));

    fit.K = K;
    fit.delta = delta;
    fit.max_residual = max_residual;
    report.K_fit = fit.K;
    report.delta_fit = fit.delta;
    report.max_residual = fit.max_residual;
    report.fit_degenerate = fit.degenerate;
    return fit;
}

HorizonSweep sweep_horizons(const EvolutionaryProblem& base,
                            const std::vector<double>& horizons, int steps_per_unit,
                            const SolverOptions& opts) {
    if (horizons.empty()) throw DimensionMismatch("sweep_horizons: no horizons given");
    for (std::size_t j = 1; j < horizons.size(); ++j)
        if (!(horizons[j] > horizons[j - 1]))
            throw DimensionMismatch("sweep_horizons: horizons must be strictly increasing");
    if (steps_per_unit < 1)
        throw DimensionMismatch("sweep_horizons: steps_per_unit must be >= 1");

    const StationarySolution stat = solve_stationary(base.ens, base.z);

    HorizonSweep sweep;
    sweep.horizons = horizons;
    sweep.avg_state_err.resize(horizons.size());
    sweep.avg_control_err.resize(horizons.size());

    for (std::size_t j = 0; j < horizons.size(); ++j) {
        EvolutionaryProblem p = base;
        const double T = horizons[j];
        p.grid = TimeGrid(T, std::max(2, static_cast<int>(std::ceil(T * steps_per_unit))));
        const EvolutionarySolution sol = solve_evolutionary(p, opts);

        const double h = p.grid.h();
        const int last = p.grid.n_steps;
        // Trapezoidal time averages of the state (per sample) and control.
        std::vector<Vector> mean_x(static_cast<std::size_t>(p.ens.size()),
                                   Vector::Zero(p.ens.n));
        Vector mean_u = Vector::Zero(p.ens.m);
        for (int k = 0; k <= last; ++k) {
            const double w = (k == 0 || k == last) ? 0.5 : 1.0;
            for (std::size_t i = 0; i < mean_x.size(); ++i)
                mean_x[i].noalias() +=
                    (w * h / T) * sol.x.states[i][static_cast<std::size_t>(k)];
            mean_u.noalias() += (w * h / T) * sol.u.values[static_cast<std::size_t>(k)];
        }
        for (std::size_t i = 0; i < mean_x.size(); ++i) mean_x[i] -= stat.x_s[i];
        sweep.avg_state_err[j] = weighted_norm(p.ens, mean_x);
        sweep.avg_control_err[j] = (mean_u - stat.u_s).norm();
    }
    return sweep;
}

} // namespace turnpike
