#pragma once

#include "turnpike/evolutionary.hpp"
#include "turnpike/stationary.hpp"

namespace turnpike {

// Distance curves between the evolutionary and stationary optima, with the
// fitted exponential envelope K(e^{-delta t} + e^{-delta (T-t)}).
struct TurnpikeReport {
    TimeGrid grid;
    std::vector<double> d_state;   // |x^T(t_k,.) - x^s|_w
    std::vector<double> d_adjoint; // |phi^T(t_k,.) - phi^s|_w
    std::vector<double> d_control; // |u^T(t_k) - u^s|
    std::vector<double> d_total;   // sum of the three

    double K_fit = 0.0;
    double delta_fit = 0.0;
    double max_residual = 0.0;
    bool fit_degenerate = false;
    double window_lo = 0.1; // window [window_lo*T, window_hi*T] for the decay fit
    double window_hi = 0.5;
};

struct EnvelopeFit {
    double K = 0.0;
    double delta = 0.0;
    double max_residual = 0.0;
    bool degenerate = false;
};

TurnpikeReport turnpike_distances(const EvolutionarySolution& evo,
                                  const StationarySolution& stat,
                                  const Ensemble& ens, const TimeGrid& grid);

/// Fits delta on the strictly decreasing nodes inside the window (log-slope
/// least squares refined by a profiled 1-d least-squares in delta), then sets
/// K = max_k d_total / envelope so the envelope dominates by construction.
/// Flags the fit degenerate when fewer than 5 usable nodes exist.
EnvelopeFit fit_envelope(TurnpikeReport& report);

struct HorizonSweep {
    std::vector<double> horizons;
    std::vector<double> avg_state_err;   // |(1/T) int x^T dt - x^s|_w
    std::vector<double> avg_control_err; // |(1/T) int u^T dt - u^s|
};

/// Re-solves the evolutionary problem for each horizon (n_steps =
/// ceil(T * steps_per_unit)) against one stationary solution and records the
/// time-averaged distances.
HorizonSweep sweep_horizons(const EvolutionaryProblem& base,
                            const std::vector<double>& horizons,
                            int steps_per_unit, const SolverOptions& opts);

} // namespace turnpike
