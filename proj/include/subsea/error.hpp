#pragma once

#include <stdexcept>
#include <string>

namespace subsea {

// Precondition violations use std::invalid_argument / std::out_of_range /
// std::domain_error. The types below cover failures that come from outside
// the caller's control (files, user-supplied text, iterative numerics).

/// A file could not be opened, read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// User-supplied text (CSV, scenario config) does not match its schema.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative numeric procedure failed to produce a usable result.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace subsea
