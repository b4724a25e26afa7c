#pragma once

#include <stdexcept>

namespace mstm {

// Shape or conformance violation in a tensor/layer op.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed config, bad CLI usage, incompatible parameter file. Exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV cells, date gaps, missing files,
// insufficient history). Exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: NaN loss, undefined metric. Exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mstm
