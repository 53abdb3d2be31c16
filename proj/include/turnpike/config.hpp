#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "turnpike/assumptions.hpp"
#include "turnpike/evolutionary.hpp"

namespace turnpike {

// Per-sample vector data given either as one constant vector, an explicit
// per-sample list, or a JSON file holding an array of arrays.
struct VectorSpec {
    enum class Kind { Constant, PerSample, File };
    Kind kind = Kind::Constant;
    Vector constant;
    std::vector<Vector> per_sample;
    std::string file;
};

struct EnsembleConfig {
    bool from_file = false;
    std::string file;
    DistributionSpec spec;
};

struct ProblemConfig {
    bool present = false;
    double T = 0.0;
    int n_steps = 0;
    VectorSpec x0;
    Vector z;
    VectorSpec phi_T; // defaults to zero when omitted
    bool phi_T_given = false;
    Scheme scheme = Scheme::ImplicitMidpoint;
};

struct OutputsConfig {
    std::string dir = "out";
    bool plots = true;
    bool gnuplot = false;
    std::vector<int> sample_indices;
};

struct FitConfig {
    double window_lo = 0.1;
    double window_hi = 0.5;
};

struct SweepConfig {
    bool present = false;
    std::vector<double> horizons;
    int steps_per_unit = 15;
};

struct CheckItemConfig {
    std::string variant; // A0 | A1 | A2-single | A2-double | complementary-C |
                         // complementary-B | coercivity-AC | coercivity-AB | average-decay
    std::optional<FeedbackSpec> gain;
    std::optional<std::vector<ScanRange>> scan;
    double alpha = 0.0; // decay rate for average-decay
};

struct ExperimentConfig {
    EnsembleConfig ensemble;
    ProblemConfig problem;
    SolverOptions solver;
    OutputsConfig outputs;
    FitConfig fit;
    SweepConfig sweep;
    std::vector<CheckItemConfig> checks;
    std::filesystem::path base_dir; // directory of the config file
};

/// Parses and validates the config. Unknown keys are rejected; every error
/// message names the offending field path. Throws ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the ensemble from the config (inline spec or referenced file).
/// A seed override replaces the spec seed; seed_used reports the one applied.
Ensemble resolve_ensemble(const ExperimentConfig& cfg,
                          std::optional<std::uint64_t> seed_override,
                          std::uint64_t* seed_used);

std::vector<Vector> resolve_vector_spec(const VectorSpec& spec, const Ensemble& ens,
                                        const std::filesystem::path& base_dir,
                                        const std::string& field);

} // namespace turnpike
