#pragma once

#include <stdexcept>
#include <string>

namespace canopy {

// Arguments violate an operation's contract (empty cloud, bad width, ...).
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A coordinate falls outside a raster's extent.
struct OutOfBoundsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file contents; message carries the line number where known.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally wrong input file (missing column, unknown enum value).
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Synthetic stand generation could not satisfy its constraints.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace canopy
