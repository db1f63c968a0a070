#pragma once

#include <stdexcept>
#include <string>

namespace hj {

/// Unknown catalog identifier; message lists the available names.
struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A user callback returned a non-finite value; message names the point.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Query outside the admissible domain (t >= T, p0 outside dom sigma*, ...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Missing or inconsistent configuration (absent constants, bad config file).
struct ConfigurationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A documented operation precondition does not hold.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A search window or resolution was inadequate (empty root set, empty grid).
struct SearchWindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hj
