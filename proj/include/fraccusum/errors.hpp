#pragma once

#include <stdexcept>
#include <string>

namespace fraccusum {

// Circulant eigenvalues went negative beyond the floating-point guard.
// Signals the caller to fall back to the exact (Cholesky) sampler.
struct EmbeddingNotPsdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeLimitExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedTauError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GridMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fraccusum
