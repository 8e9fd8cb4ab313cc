#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spred {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or length mismatch between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside its mathematical domain (negative variance, p < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  InstabilityError(Index step, const std::string& what)
      : Error(what), step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_;
};

class MemoryBudgetError : public Error {
 public:
  MemoryBudgetError(std::size_t required, std::size_t budget);
  std::size_t required() const { return required_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t required_;
  std::size_t budget_;
};

}  // namespace spred
