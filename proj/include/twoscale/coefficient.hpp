#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "twoscale/separable.hpp"
#include "twoscale/types.hpp"

namespace twoscale {

/// psi_j with its sup-norm b_j and the C^1(C^{1,1}) bound used by the rate
/// diagnostics.
struct ExpansionTerm {
  std::string id;
  SeparableTerm psi;
  double sup_norm = 0.0;
  double c11_norm = 0.0;

  static ExpansionTerm from(std::string id, const SeparableTerm& psi) {
    return {std::move(id), psi, psi.sup_abs(), psi.c11_norm()};
  }
};

struct CoercivityBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Number of sampling points per axis used for inf/sup of the mean and
/// offset fields.
inline constexpr int kSamplingPointsPerAxis = 64;
/// Relative slack allowed on the sampled inf when checking the uniform
/// admissibility bound on sum_j b_j.
inline constexpr double kAdmissibilityMargin = 0.01;

/// Parametric two-scale coefficient A(z; x, y).
///
///   uniform:       A = Abar + sum_j z_j psi_j,            z_j in [-1, 1]
///   log-gaussian:  A = A* + exp(Abar + sum_j z_j psi_j),  z_j ~ N(0, 1)
///
/// Immutable after construction; safe to share across threads.
class TwoScaleCoefficient {
 public:
  /// Throws NumericalError when sum_j b_j exceeds kappa/(1+kappa) inf Abar.
  /// Without an explicit kappa the smallest admissible one is used.
  static TwoScaleCoefficient uniform(int dim, SeparableSum mean, std::vector<ExpansionTerm> terms,
                                     std::optional<double> kappa = std::nullopt);
  static TwoScaleCoefficient log_gaussian(int dim, SeparableSum offset, SeparableSum mean,
                                          std::vector<ExpansionTerm> terms);

  PriorKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<ExpansionTerm>& terms() const { return terms_; }
  const SeparableSum& mean() const { return mean_; }
  const SeparableSum& offset() const { return offset_; }
  double kappa() const { return kappa_; }
  double mean_inf() const { return mean_inf_; }
  double mean_sup() const { return mean_sup_; }
  double sum_sup_norms() const;

  /// A(z; x, y). Throws DimensionError on |z| != J and NumericalError on a
  /// non-finite or non-positive value.
  double eval(const ParameterVector& z, const Point& x, const Point& y) const;
  /// Exponent (log-gaussian) or value (uniform) without the checks.
  double eval_unchecked(std::span<const double> z, const Point& x, const Point& y) const;

  CoercivityBounds coercivity_bounds(const ParameterVector& z) const;

  void check_parameter(const ParameterVector& z) const;

 private:
  TwoScaleCoefficient() = default;
  void sample_fields();

  PriorKind kind_ = PriorKind::uniform;
  int dim_ = 1;
  SeparableSum mean_;
  SeparableSum offset_;
  std::vector<ExpansionTerm> terms_;
  double kappa_ = 0.0;
  double mean_inf_ = 0.0, mean_sup_ = 0.0;
  double offset_inf_ = 0.0, offset_sup_ = 0.0;
};

/// Tabulated evaluation of A(z; x_p, y_q) on a fixed tensor point set,
/// reusing the per-axis factor values for every z.
class CoefficientTable {
 public:
  CoefficientTable(const TwoScaleCoefficient& coeff, std::vector<Point> xs, std::vector<Point> ys);

  std::size_t nx() const { return xs_.size(); }
  std::size_t ny() const { return ys_.size(); }
  const std::vector<Point>& x_points() const { return xs_; }
  const std::vector<Point>& y_points() const { return ys_; }

  /// out[q] = A(z; x_ix, y_q) for all q; throws NumericalError on a
  /// non-positive or non-finite value.
  void evaluate_row(const ParameterVector& z, std::size_t ix, std::span<double> out) const;
  /// Row-major (x outer) evaluation of the whole table.
  std::vector<double> evaluate(const ParameterVector& z) const;

 private:
  const TwoScaleCoefficient* coeff_;
  std::vector<Point> xs_, ys_;
  // Row-major [term][point]; mean and offset terms first.
  std::vector<double> tx_, ty_;
  std::size_t n_mean_ = 0, n_offset_ = 0;
};

/// i.i.d. Uniform[-1, 1] or N(0, 1) coordinates drawn from `rng`.
ParameterVector sample_prior(PriorKind kind, std::size_t count, std::mt19937_64& rng);
ParameterVector sample_prior(PriorKind kind, std::size_t count, std::uint64_t seed);

}  // namespace twoscale
