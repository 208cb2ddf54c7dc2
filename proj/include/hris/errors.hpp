#pragma once

#include <stdexcept>
#include <string>

namespace hris {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct InvalidDistance : Error {
  using Error::Error;
};

struct AmplitudeExceedsCap : Error {
  using Error::Error;
};

struct InvalidArchitecture : Error {
  using Error::Error;
};

struct InvalidRegime : Error {
  using Error::Error;
};

struct InfeasibleBudget : Error {
  using Error::Error;
};

struct NonFiniteValue : Error {
  using Error::Error;
};

struct RankDeficientDirectChannel : Error {
  using Error::Error;
};

// Scenario-file problems, split so the CLI can map them to exit codes.
struct ParseError : Error {
  using Error::Error;
};

struct UnitError : Error {
  using Error::Error;
};

struct InvariantViolation : Error {
  using Error::Error;
};

}  // namespace hris
