#pragma once

#include <stdexcept>
#include <string>

namespace turnpike {

struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotSymmetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroWeight : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularStepMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CgStalled : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries the index of the offending ensemble sample.
struct SingularSample : std::runtime_error {
    int sample_index;
    SingularSample(int index, const std::string& what)
        : std::runtime_error(what), sample_index(index) {}
};

struct TooManyGainEntries : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config validation failure; the message names the offending field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace turnpike
