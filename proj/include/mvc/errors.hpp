#pragma once

#include <stdexcept>
#include <string>

namespace mvc {

// Shape or dimension disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Index outside its valid range (labels, pair indices, frame ids).
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Normalizing a vector whose norm is numerically zero.
struct DegenerateVectorError : std::domain_error {
  using std::domain_error::domain_error;
};

// Non-finite loss or gradient encountered during optimization.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value or combination.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input file; message carries the location.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mvc
