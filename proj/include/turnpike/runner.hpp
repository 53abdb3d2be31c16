#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace turnpike {

struct RunnerArgs {
    std::string command; // solve-evolutionary | solve-stationary | check-assumptions |
                         // turnpike-report | sweep-horizons
    std::filesystem::path config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool require_pass = false;
};

// Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
// 4 failed assumption check under --require-pass.
int run_command(const RunnerArgs& args);

} // namespace turnpike
