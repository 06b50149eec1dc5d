#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twoscale {

/// Selects between the OpenMP kernels and their serial reference path.
enum class Execution { serial, parallel };

/// Base class of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched sizes between parameters, terms, grids or observation vectors.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user input: unknown catalogue id, malformed config or data file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Ill-posed configuration detected while evaluating (non-finite or
/// non-positive coefficient, failed factorization, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped without reaching its tolerance.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, std::size_t iterations, double residual)
      : NumericalError(what + " (iterations=" + std::to_string(iterations) +
                       ", relative residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

enum class PriorKind { uniform, gaussian };

inline const char* to_string(PriorKind kind) {
  return kind == PriorKind::uniform ? "uniform" : "gaussian";
}

/// Truncated coordinate sequence z = (z_1, ..., z_J) selecting one
/// coefficient realization.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::vector<double> entries) : entries_(std::move(entries)) {}
  ParameterVector(std::initializer_list<double> entries) : entries_(entries) {}

  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t j) const { return entries_[j]; }
  double& operator[](std::size_t j) { return entries_[j]; }
  std::span<const double> values() const { return entries_; }
  std::span<double> values() { return entries_; }
  const std::vector<double>& vector() const { return entries_; }

  bool all_finite() const {
    for (double v : entries_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool within_unit_box() const {
    for (double v : entries_)
      if (!(v >= -1.0 && v <= 1.0)) return false;
    return true;
  }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> entries_;
};

/// Point in D or Y; only the first `dim` entries are meaningful.
struct Point {
  double c[2] = {0.0, 0.0};
  double operator[](int k) const { return c[k]; }
  double& operator[](int k) { return c[k]; }
};

inline Point make_point(double x0, double x1 = 0.0) {
  Point p;
  p.c[0] = x0;
  p.c[1] = x1;
  return p;
}

}  // namespace twoscale
