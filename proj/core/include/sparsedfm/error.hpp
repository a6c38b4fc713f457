#pragma once

#include <stdexcept>
#include <string>

namespace sdfm {

// Base class for every error raised by the library. The CLI maps the three
// concrete kinds onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or contradictory configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed input data: parse failures, missing columns, impossible masks.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite or singular intermediate during estimation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdfm
