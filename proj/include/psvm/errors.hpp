#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace psvm {

/// Invalid user-supplied configuration (bad grid, inconsistent partition, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed sparse-format input. Carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Kernel matrix without any positive eigenvalue.
class DegenerateKernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A QP solve that ran out of iterations. The best iterate and its KKT
/// violation are kept so callers can decide whether to accept it.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Eigen::VectorXd best_alpha, double residual)
      : std::runtime_error(what), best_alpha_(std::move(best_alpha)), residual_(residual) {}

  const Eigen::VectorXd& best_alpha() const noexcept { return best_alpha_; }
  double residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd best_alpha_;
  double residual_;
};

}  // namespace psvm
