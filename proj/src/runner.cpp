#include "turnpike/runner.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "turnpike/config.hpp"
#include "turnpike/io.hpp"
#include "turnpike/parallel.hpp"
#include "turnpike/turnpike_report.hpp"

namespace turnpike {

using nlohmann::json;

namespace {

struct RunContext {
    ExperimentConfig cfg;
    Ensemble ens;
    std::uint64_t seed_used = 0;
    std::filesystem::path out;
};

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_run_meta(const RunContext& ctx, const std::string& command) {
    json meta;
    meta["command"] = command;
    meta["ensemble"] = {{"samples", ctx.ens.size()},
                        {"n", ctx.ens.n},
                        {"m", ctx.ens.m},
                        {"p", ctx.ens.p},
                        {"seed", ctx.seed_used}};
    if (ctx.cfg.problem.present) {
        meta["problem"] = {{"T", ctx.cfg.problem.T},
                           {"n_steps", ctx.cfg.problem.n_steps},
                           {"scheme", ctx.cfg.problem.scheme == Scheme::ImplicitMidpoint
                                          ? "implicit-midpoint"
                                          : "backward-euler"}};
    }
    meta["solver"] = {{"tol_rel_grad", ctx.cfg.solver.tol_rel_grad},
                      {"max_iters", ctx.cfg.solver.max_iters},
                      {"method", ctx.cfg.solver.method == SolveMethod::BbArmijo
                                     ? "bb-armijo"
                                     : "cg"}};
    meta["threads"] = worker_thread_count();
    write_json_file(meta, ctx.out / "run_meta.json");
}

EvolutionaryProblem build_problem(const RunContext& ctx) {
    if (!ctx.cfg.problem.present)
        throw ConfigError("problem: section required for this command");
    EvolutionaryProblem p;
    p.ens = ctx.ens;
    p.grid = TimeGrid(ctx.cfg.problem.T, ctx.cfg.problem.n_steps);
    p.scheme = ctx.cfg.problem.scheme;
    p.x0 = resolve_vector_spec(ctx.cfg.problem.x0, ctx.ens, ctx.cfg.base_dir, "problem.x0");
    if (ctx.cfg.problem.z.size() != ctx.ens.p)
        throw ConfigError("problem.z: expected dimension " + std::to_string(ctx.ens.p));
    p.z = ctx.cfg.problem.z;
    if (ctx.cfg.problem.phi_T_given)
        p.phi_T = resolve_vector_spec(ctx.cfg.problem.phi_T, ctx.ens, ctx.cfg.base_dir,
                                      "problem.phi_T");
    else
        p.phi_T.assign(ctx.ens.samples.size(), Vector::Zero(ctx.ens.n));
    return p;
}

EvolutionarySolution solve_with_configured_method(const EvolutionaryProblem& p,
                                                  const SolverOptions& opts) {
    return opts.method == SolveMethod::Cg ? solve_kkt_oracle(p, opts)
                                          : solve_evolutionary(p, opts);
}

std::vector<Vector> node_means(const Ensemble& ens, const EnsembleTrajectory& traj) {
    std::vector<Vector> means(static_cast<std::size_t>(traj.n_nodes()),
                              Vector::Zero(ens.n));
    for (std::size_t i = 0; i < ens.samples.size(); ++i)
        for (int k = 0; k < traj.n_nodes(); ++k)
            means[static_cast<std::size_t>(k)].noalias() +=
                ens.samples[i].weight * traj.states[i][static_cast<std::size_t>(k)];
    return means;
}

void write_solution_artifacts(const RunContext& ctx, const EvolutionaryProblem& p,
                              const EvolutionarySolution& sol) {
    const TimeGrid& grid = p.grid;

    // solution.csv: t, controls, then state components of the requested samples.
    CsvTable solution;
    solution.columns.push_back("t");
    for (Eigen::Index c = 0; c < p.ens.m; ++c)
        solution.columns.push_back("u_" + std::to_string(c + 1));
    for (int idx : ctx.cfg.outputs.sample_indices) {
        if (idx >= p.ens.size())
            throw ConfigError("outputs.sample_indices: index " + std::to_string(idx) +
                              " out of range for " + std::to_string(p.ens.size()) +
                              " samples");
        for (Eigen::Index c = 0; c < p.ens.n; ++c)
            solution.columns.push_back("x" + std::to_string(c + 1) + "_s" +
                                       std::to_string(idx));
    }
    for (int k = 0; k < grid.n_nodes(); ++k) {
        std::vector<double> row;
        row.push_back(grid.node(k));
        const Vector& u = sol.u.values[static_cast<std::size_t>(k)];
        for (Eigen::Index c = 0; c < u.size(); ++c) row.push_back(u[c]);
        for (int idx : ctx.cfg.outputs.sample_indices) {
            const Vector& x =
                sol.x.states[static_cast<std::size_t>(idx)][static_cast<std::size_t>(k)];
            for (Eigen::Index c = 0; c < x.size(); ++c) row.push_back(x[c]);
        }
        solution.rows.push_back(std::move(row));
    }
    write_csv(solution, ctx.out / "solution.csv");

    // mean_state.csv: t, E[x]_1..n
    const std::vector<Vector> means = node_means(p.ens, sol.x);
    CsvTable mean_state;
    mean_state.columns.push_back("t");
    for (Eigen::Index c = 0; c < p.ens.n; ++c)
        mean_state.columns.push_back("Ex_" + std::to_string(c + 1));
    for (int k = 0; k < grid.n_nodes(); ++k) {
        std::vector<double> row{grid.node(k)};
        for (Eigen::Index c = 0; c < p.ens.n; ++c)
            row.push_back(means[static_cast<std::size_t>(k)][c]);
        mean_state.rows.push_back(std::move(row));
    }
    write_csv(mean_state, ctx.out / "mean_state.csv");

    // trajectories.csv for the requested samples: t, sample_index, x_1..x_n
    if (!ctx.cfg.outputs.sample_indices.empty()) {
        CsvTable traj;
        traj.columns.push_back("t");
        traj.columns.push_back("sample_index");
        for (Eigen::Index c = 0; c < p.ens.n; ++c)
            traj.columns.push_back("x_" + std::to_string(c + 1));
        for (int idx : ctx.cfg.outputs.sample_indices) {
            for (int k = 0; k < grid.n_nodes(); ++k) {
                std::vector<double> row{grid.node(k), static_cast<double>(idx)};
                const Vector& x =
                    sol.x.states[static_cast<std::size_t>(idx)][static_cast<std::size_t>(k)];
                for (Eigen::Index c = 0; c < x.size(); ++c) row.push_back(x[c]);
                traj.rows.push_back(std::move(row));
            }
        }
        write_csv(traj, ctx.out / "trajectories.csv");
    }

    json summary;
    summary["cost"] = sol.cost;
    summary["grad_norm"] = sol.grad_norm;
    summary["iterations"] = sol.iterations;
    summary["converged"] = sol.converged;
    write_json_file(summary, ctx.out / "summary.json");
}

void plot_solution(const RunContext& ctx, const EvolutionaryProblem& p,
                   const EvolutionarySolution& sol, const StationarySolution* stat) {
    if (!ctx.cfg.outputs.plots) return;
    const TimeGrid& grid = p.grid;
    std::vector<double> ts;
    for (int k = 0; k < grid.n_nodes(); ++k) ts.push_back(grid.node(k));

    // E[x(t)] components, optionally with the stationary mean as a flat line.
    const std::vector<Vector> means = node_means(p.ens, sol.x);
    std::vector<LineSeries> state_series;
    for (Eigen::Index c = 0; c < p.ens.n; ++c) {
        LineSeries s;
        s.label = "E[x_" + std::to_string(c + 1) + "]";
        s.x = ts;
        for (const Vector& v : means) s.y.push_back(v[c]);
        state_series.push_back(std::move(s));
    }
    if (stat) {
        Vector mean_xs = Vector::Zero(p.ens.n);
        for (std::size_t i = 0; i < p.ens.samples.size(); ++i)
            mean_xs.noalias() += p.ens.samples[i].weight * stat->x_s[i];
        for (Eigen::Index c = 0; c < p.ens.n; ++c) {
            LineSeries s;
            s.label = "E[x^s_" + std::to_string(c + 1) + "]";
            s.x = ts;
            s.y.assign(ts.size(), mean_xs[c]);
            state_series.push_back(std::move(s));
        }
    }
    write_svg_plot(state_series, "Mean state vs time", "t", "E[x]",
                   ctx.out / "state_mean.svg");

    std::vector<LineSeries> control_series;
    for (Eigen::Index c = 0; c < p.ens.m; ++c) {
        LineSeries s;
        s.label = "u_" + std::to_string(c + 1);
        s.x = ts;
        for (const Vector& u : sol.u.values) s.y.push_back(u[c]);
        control_series.push_back(std::move(s));
    }
    if (stat) {
        for (Eigen::Index c = 0; c < p.ens.m; ++c) {
            LineSeries s;
            s.label = "u^s_" + std::to_string(c + 1);
            s.x = ts;
            s.y.assign(ts.size(), stat->u_s[c]);
            control_series.push_back(std::move(s));
        }
    }
    write_svg_plot(control_series, "Optimal control vs time", "t", "u",
                   ctx.out / "control.svg");
}

void write_stationary_artifacts(const RunContext& ctx, const StationarySolution& stat) {
    json out;
    out["u_s"] = vector_to_json(stat.u_s);
    out["cost"] = stat.cost;
    out["consistency_residual"] = consistency_residual(stat, ctx.ens);
    out["M"] = matrix_to_json(stat.M);
    write_json_file(out, ctx.out / "stationary.json");

    CsvTable table;
    table.columns.push_back("sample_index");
    for (Eigen::Index c = 0; c < ctx.ens.n; ++c)
        table.columns.push_back("x_s_" + std::to_string(c + 1));
    for (Eigen::Index c = 0; c < ctx.ens.n; ++c)
        table.columns.push_back("phi_s_" + std::to_string(c + 1));
    for (Eigen::Index i = 0; i < ctx.ens.size(); ++i) {
        std::vector<double> row{static_cast<double>(i)};
        for (Eigen::Index c = 0; c < ctx.ens.n; ++c)
            row.push_back(stat.x_s[static_cast<std::size_t>(i)][c]);
        for (Eigen::Index c = 0; c < ctx.ens.n; ++c)
            row.push_back(stat.phi_s[static_cast<std::size_t>(i)][c]);
        table.rows.push_back(std::move(row));
    }
    write_csv(table, ctx.out / "stationary_samples.csv");
}

json report_to_json(const CheckReport& report) {
    json j;
    j["variant"] = report.variant;
    j["alpha"] = report.alpha;
    j["passed"] = report.passed;
    json witness = json::array();
    for (const Vector& w : report.witness) witness.push_back(vector_to_json(w));
    j["witness"] = witness;
    json gains = json::array();
    for (const Matrix& g : report.gain_used) gains.push_back(matrix_to_json(g));
    j["gain_used"] = gains;
    j["exhaustive"] = report.exhaustive;
    return j;
}

void write_gnuplot_script(const RunContext& ctx, const std::string& command) {
    if (!ctx.cfg.outputs.gnuplot) return;
    std::string gp = "set datafile separator ','\nset key outside\nset grid\n";
    if (command == "turnpike-report") {
        gp += "set logscale y\n"
              "plot 'turnpike.csv' using 1:5 with lines title 'd_total', \\\n"
              "     'turnpike.csv' using 1:6 with lines title 'envelope'\n";
    } else if (command == "sweep-horizons") {
        gp += "plot 'sweep.csv' using 1:2 with linespoints title 'avg state err', \\\n"
              "     'sweep.csv' using 1:3 with linespoints title 'avg control err'\n";
    } else {
        gp += "plot 'solution.csv' using 1:2 with lines title 'u_1'\n";
    }
    std::ofstream out(ctx.out / "plot.gp", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + (ctx.out / "plot.gp").string());
    out << gp;
}

int cmd_solve_evolutionary(RunContext& ctx) {
    const EvolutionaryProblem p = build_problem(ctx);
    const EvolutionarySolution sol = solve_with_configured_method(p, ctx.cfg.solver);
    write_solution_artifacts(ctx, p, sol);
    plot_solution(ctx, p, sol, nullptr);
    write_gnuplot_script(ctx, "solve-evolutionary");
    if (!sol.converged) {
        std::cerr << "solver did not converge within " << ctx.cfg.solver.max_iters
                  << " iterations (grad_norm " << sol.grad_norm << ")\n";
        return 3;
    }
    return 0;
}

int cmd_solve_stationary(RunContext& ctx) {
    const StationarySolution stat = solve_stationary(ctx.ens, ctx.cfg.problem.present
                                                                  ? ctx.cfg.problem.z
                                                                  : Vector::Zero(ctx.ens.p));
    write_stationary_artifacts(ctx, stat);
    return 0;
}

int cmd_check_assumptions(RunContext& ctx, bool require_pass) {
    if (ctx.cfg.checks.empty())
        throw ConfigError("check.run: section required for check-assumptions");
    json reports = json::array();
    bool all_passed = true;
    for (std::size_t i = 0; i < ctx.cfg.checks.size(); ++i) {
        const CheckItemConfig& item = ctx.cfg.checks[i];
        json entry;
        if (item.variant == "coercivity-AC" || item.variant == "coercivity-AB") {
            const double alpha = stationary_coercivity(
                ctx.ens, item.variant == "coercivity-AC" ? CoercivitySide::AC
                                                         : CoercivitySide::AB);
            entry["variant"] = item.variant;
            entry["alpha"] = alpha;
            entry["passed"] = alpha > 0.0;
            entry["exhaustive"] = true;
            if (!(alpha > 0.0)) all_passed = false;
        } else if (item.variant == "average-decay") {
            const EvolutionaryProblem p = build_problem(ctx);
            const DecayCheck decay =
                verify_average_decay(ctx.ens, *item.gain, p.grid, p.x0, item.alpha);
            entry["variant"] = item.variant;
            entry["alpha"] = item.alpha;
            entry["passed"] = decay.holds;
            entry["min_slack"] = decay.min_slack;
            entry["exhaustive"] = true;
            if (!decay.holds) all_passed = false;
        } else {
            CheckReport report;
            if (item.scan) {
                ScanTarget target = ScanTarget::A0;
                if (item.variant == "A1") target = ScanTarget::A1;
                if (item.variant == "A2-single") target = ScanTarget::A2;
                report = scan_scalar_feedback(ctx.ens, target, *item.scan);
            } else if (item.variant == "A0") {
                report = check_A0(ctx.ens, *item.gain);
            } else if (item.variant == "A1") {
                report = check_A1(ctx.ens, *item.gain);
            } else if (item.variant == "A2-single") {
                report = check_A2(ctx.ens, *item.gain, A2Variant::Single);
            } else if (item.variant == "A2-double") {
                report = check_A2(ctx.ens, *item.gain, A2Variant::Double);
            } else if (item.variant == "complementary-C") {
                report = check_complementary(ctx.ens, *item.gain, ComplementarySide::C);
            } else if (item.variant == "complementary-B") {
                report = check_complementary(ctx.ens, *item.gain, ComplementarySide::B);
            }
            if (!report.passed) all_passed = false;
            entry = report_to_json(report);
        }
        reports.push_back(std::move(entry));
    }
    write_json_file(reports, ctx.out / "checks.json");
    if (require_pass && !all_passed) {
        std::cerr << "one or more assumption checks failed\n";
        return 4;
    }
    return 0;
}

int cmd_turnpike_report(RunContext& ctx) {
    const EvolutionaryProblem p = build_problem(ctx);
    const StationarySolution stat = solve_stationary(ctx.ens, p.z);
    const EvolutionarySolution sol = solve_with_configured_method(p, ctx.cfg.solver);

    TurnpikeReport report = turnpike_distances(sol, stat, ctx.ens, p.grid);
    report.window_lo = ctx.cfg.fit.window_lo;
    report.window_hi = ctx.cfg.fit.window_hi;
    const EnvelopeFit fit = fit_envelope(report);

    CsvTable table;
    table.columns = {"t", "d_state", "d_adjoint", "d_control", "d_total", "envelope"};
    for (int k = 0; k < p.grid.n_nodes(); ++k) {
        const double t = p.grid.node(k);
        const double env = fit.K * (std::exp(-fit.delta * t) +
                                    std::exp(-fit.delta * (p.grid.T - t)));
        table.rows.push_back({t, report.d_state[static_cast<std::size_t>(k)],
                              report.d_adjoint[static_cast<std::size_t>(k)],
                              report.d_control[static_cast<std::size_t>(k)],
                              report.d_total[static_cast<std::size_t>(k)], env});
    }
    write_csv(table, ctx.out / "turnpike.csv");

    json fj;
    fj["K"] = fit.K;
    fj["delta"] = fit.delta;
    fj["max_residual"] = fit.max_residual;
    fj["degenerate"] = fit.degenerate;
    fj["window"] = {{"lo", report.window_lo}, {"hi", report.window_hi}};
    write_json_file(fj, ctx.out / "fit.json");

    write_stationary_artifacts(ctx, stat);
    write_solution_artifacts(ctx, p, sol);
    plot_solution(ctx, p, sol, &stat);
    if (ctx.cfg.outputs.plots) {
        std::vector<double> ts;
        for (int k = 0; k < p.grid.n_nodes(); ++k) ts.push_back(p.grid.node(k));
        LineSeries d{"d_total", ts, report.d_total};
        LineSeries env{"envelope", ts, {}};
        for (double t : ts)
            env.y.push_back(fit.K * (std::exp(-fit.delta * t) +
                                     std::exp(-fit.delta * (p.grid.T - t))));
        write_svg_plot({d, env}, "Turnpike distance and fitted envelope", "t",
                       "distance", ctx.out / "turnpike.svg");
    }
    write_gnuplot_script(ctx, "turnpike-report");
    if (!sol.converged) {
        std::cerr << "solver did not converge; turnpike report may be unreliable\n";
        return 3;
    }
    return 0;
}

int cmd_sweep_horizons(RunContext& ctx) {
    if (!ctx.cfg.sweep.present)
        throw ConfigError("sweep: section required for sweep-horizons");
    const EvolutionaryProblem base = build_problem(ctx);
    const HorizonSweep sweep = sweep_horizons(base, ctx.cfg.sweep.horizons,
                                              ctx.cfg.sweep.steps_per_unit, ctx.cfg.solver);

    CsvTable table;
    table.columns = {"T", "avg_state_err", "avg_control_err"};
    for (std::size_t j = 0; j < sweep.horizons.size(); ++j)
        table.rows.push_back(
            {sweep.horizons[j], sweep.avg_state_err[j], sweep.avg_control_err[j]});
    write_csv(table, ctx.out / "sweep.csv");

    if (ctx.cfg.outputs.plots) {
        LineSeries s1{"avg state err", sweep.horizons, sweep.avg_state_err};
        LineSeries s2{"avg control err", sweep.horizons, sweep.avg_control_err};
        write_svg_plot({s1, s2}, "Averaged distance to the stationary optimum", "T",
                       "error", ctx.out / "sweep.svg");
    }
    write_gnuplot_script(ctx, "sweep-horizons");
    return 0;
}

} // namespace

int run_command(const RunnerArgs& args) {
    try {
        RunContext ctx;
        ctx.cfg = load_config(args.config_path);
        if (args.out_dir) ctx.cfg.outputs.dir = *args.out_dir;
        ctx.out = ctx.cfg.outputs.dir;
        std::filesystem::create_directories(ctx.out);
        ctx.ens = resolve_ensemble(ctx.cfg, args.seed, &ctx.seed_used);
        write_run_meta(ctx, args.command);

        if (args.command == "solve-evolutionary") return cmd_solve_evolutionary(ctx);
        if (args.command == "solve-stationary") return cmd_solve_stationary(ctx);
        if (args.command == "check-assumptions")
            return cmd_check_assumptions(ctx, args.require_pass);
        if (args.command == "turnpike-report") return cmd_turnpike_report(ctx);
        if (args.command == "sweep-horizons") return cmd_sweep_horizons(ctx);
        std::cerr << "unknown command: " << args.command << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SingularSample& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionMismatch& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ZeroWeight& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const CgStalled& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace turnpike
