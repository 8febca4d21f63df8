#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qedft {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A photon mode whose wavenumber cannot be resolved by the matter grid.
class AliasingError : public Error {
public:
  using Error::Error;
};

/// Mode coefficients that violate c_n = conj(c_{-n}).
class SymmetryError : public Error {
public:
  using Error::Error;
};

class BudgetError : public Error {
public:
  BudgetError(std::size_t dimension, std::size_t budget)
      : Error("composite dimension " + std::to_string(dimension) +
              " exceeds budget " + std::to_string(budget)),
        dimension_(dimension) {}
  std::size_t dimension() const { return dimension_; }

private:
  std::size_t dimension_;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

/// Configuration problem tied to a specific key.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

}  // namespace qedft
