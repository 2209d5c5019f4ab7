#ifndef JOINTFIT_ERRORS_HPP
#define JOINTFIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace jointfit {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input file is missing required columns or has an unusable header.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A cell or a formula string could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Data violates a structural invariant (duplicate ids, orphan subjects,
// temporal inconsistencies, bad argument values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-convergence, singular design, overflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace jointfit

#endif
