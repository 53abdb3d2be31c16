#include <CLI11.hpp>

#include "turnpike/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Ensemble linear-quadratic tracking lab: solvers, assumption "
                 "checks and turnpike diagnostics"};
    app.require_subcommand(1);

    const std::vector<std::string> commands = {"solve-evolutionary", "solve-stationary",
                                               "check-assumptions", "turnpike-report",
                                               "sweep-horizons"};
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool require_pass = false;

    for (const std::string& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides outputs.dir)");
        sub->add_option("--seed", seed, "seed override for generated ensembles");
        if (name == "check-assumptions")
            sub->add_flag("--require-pass", require_pass,
                          "exit with code 4 when any check fails");
    }

    CLI11_PARSE(app, argc, argv);

    turnpike::RunnerArgs args;
    args.command = app.get_subcommands().front()->get_name();
    args.config_path = config_path;
    if (!out_dir.empty()) args.out_dir = out_dir;
    if (app.get_subcommands().front()->count("--seed") > 0) args.seed = seed;
    args.require_pass = require_pass;
    return turnpike::run_command(args);
}
