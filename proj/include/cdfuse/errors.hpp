#pragma once
#include <stdexcept>

namespace cdfuse {

// Malformed user input: bad survey rows, invalid counts, broken config.
// CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation invoked against its contract (wrong prior family,
// unnormalized grid passed where a density is required). CLI exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A moment fit could not reach its targets. CLI exit code 1.
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative numeric routine exceeded its budget. CLI exit code 1.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The MCMC sampler accepted nothing over a whole burn-in. CLI exit code 1.
struct SamplerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-integrable or otherwise degenerate numeric input. CLI exit code 1.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cdfuse
