#pragma once

#include <stdexcept>
#include <string>

namespace lch {

// Data or validation problem: bad file, bad config, violated precondition.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or degenerate numerics (zero-norm code vectors, NaN loss).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix shapes between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace lch
