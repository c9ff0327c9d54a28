#pragma once

#include <stdexcept>
#include <string>

namespace cycleqd {

// Root of every error raised by the library. Commands map ConfigError to
// exit status 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompatibleParameters : public Error {
 public:
  using Error::Error;
};

class InvalidValue : public Error {
 public:
  using Error::Error;
};

class InvalidCoefficient : public Error {
 public:
  using Error::Error;
};

class InvalidFitness : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(std::string entry, const std::string& what)
      : Error("numerical failure in entry '" + entry + "': " + what),
        entry_(std::move(entry)) {}
  const std::string& entry() const noexcept { return entry_; }

 private:
  std::string entry_;
};

class UndefinedSimilarity : public Error {
 public:
  using Error::Error;
};

class DegenerateCrossover : public Error {
 public:
  using Error::Error;
};

class EmptyArchive : public Error {
 public:
  using Error::Error;
};

class EvaluationFailure : public Error {
 public:
  using Error::Error;
};

class TrainingFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateBounds : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace cycleqd
