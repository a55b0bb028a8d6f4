#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace survinfo {

// Base for every error raised by the library. name() is the stable
// identifier printed by the CLI on standard error.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Input problems (bad CSV, unknown fixture). Reported as usage errors.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : InputError("ParseError", "line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Numerical failures. The CLI maps these to exit status 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

#define SURVINFO_NUMERICAL_ERROR(Name)                                   \
  class Name : public NumericalError {                                   \
   public:                                                               \
    explicit Name(const std::string& what) : NumericalError(#Name, what) {} \
  };

SURVINFO_NUMERICAL_ERROR(NoEvents)
SURVINFO_NUMERICAL_ERROR(MonotoneLikelihood)
SURVINFO_NUMERICAL_ERROR(SingularInformation)
SURVINFO_NUMERICAL_ERROR(NonConvergence)
SURVINFO_NUMERICAL_ERROR(FactorOutOfRange)
SURVINFO_NUMERICAL_ERROR(DegenerateDenominator)
SURVINFO_NUMERICAL_ERROR(ExcessiveRefitFailures)
SURVINFO_NUMERICAL_ERROR(DegenerateVariance)

#undef SURVINFO_NUMERICAL_ERROR

}  // namespace survinfo
