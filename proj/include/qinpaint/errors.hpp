#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qinpaint {

/// Raised when two operands disagree on shape. The message names both shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Geometry that cannot be realized (non-positive extents, indivisible sizes).
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The optimization produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t iteration, double loss)
        : std::runtime_error("loss became non-finite (" + std::to_string(loss) +
                             ") at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace qinpaint
