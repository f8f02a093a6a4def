#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rodband {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  config_error = 1,
  numerical_failure = 2,
  invalid_geometry = 3,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

struct GeometryError : Error {
  explicit GeometryError(const std::string& what) : Error(what, ExitCode::invalid_geometry) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(what, ExitCode::numerical_failure) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(what, ExitCode::numerical_failure) {}
};

// Raised when an evaluation point falls inside the exclusion radius of a pole.
struct PoleProximityError : Error {
  PoleProximityError(const std::string& what, double pole)
      : Error(what, ExitCode::numerical_failure), pole_(pole) {}
  double pole() const noexcept { return pole_; }

 private:
  double pole_;
};

// Iterative solver gave up; carries the iterate history.
struct NonConvergenceError : NumericalError {
  NonConvergenceError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace rodband
