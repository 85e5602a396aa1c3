#pragma once

#include <stdexcept>
#include <string>

namespace porediff {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed files, bad configuration values, empty phases.
struct input_error : error {
    using error::error;
};

/// Node index outside the grid geometry.
struct bounds_error : error {
    using error::error;
};

/// Unknown property/channel name.
struct property_error : error {
    using error::error;
};

/// File-level failures: unreadable paths, truncated or corrupt containers.
struct io_error : error {
    using error::error;
};

/// Requested time step violates the explicit stability bound.
struct stability_error : error {
    using error::error;
};

/// Non-finite values produced during a run.
struct numeric_error : error {
    using error::error;
};

} // namespace porediff
