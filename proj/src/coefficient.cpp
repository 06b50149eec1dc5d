#include "twoscale/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace twoscale {
namespace {

bool is_constant(const SeparableTerm& t) {
  for (int i = 0; i < t.dim; ++i)
    if (t.x_factors[i].kind != Factor1d::Kind::one || t.y_factors[i].kind != Factor1d::Kind::one)
      return false;
  return true;
}

// inf and sup of a separable sum over the closed sampling grid of D x Y.
std::pair<double, double> sampled_range(const SeparableSum& sum, int dim) {
  if (sum.empty()) return {0.0, 0.0};
  if (std::all_of(sum.terms.begin(), sum.terms.end(), is_constant)) {
    double c = 0.0;
    for (const auto& t : sum.terms) c += t.scale;
    return {c, c};
  }
  const int n = kSamplingPointsPerAxis;
  auto coord = [n](int i) { return static_cast<double>(i) / (n - 1); };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  if (dim == 1) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double v = sum.value(make_point(coord(i)), make_point(coord(j)));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  } else {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int j0 = 0; j0 < n; ++j0)
          for (int j1 = 0; j1 < n; ++j1) {
            const double v = sum.value(make_point(coord(i0), coord(i1)), make_point(coord(j0), coord(j1)));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
  }
  return {lo, hi};
}

void check_terms(int dim, const std::vector<ExpansionTerm>& terms, const SeparableSum& mean) {
  if (dim != 1 && dim != 2) throw DimensionError("coefficient dimension must be 1 or 2");
  for (const auto& t : terms) {
    if (t.psi.dim != dim) throw DimensionError("expansion term '" + t.id + "' has wrong dimension");
    if (!t.psi.y_periodic()) throw DimensionError("expansion term '" + t.id + "' is not Y-periodic");
  }
  for (const auto& t : mean.terms)
    if (t.dim != dim) throw DimensionError("mean field term has wrong dimension");
}

}  // namespace

TwoScaleCoefficient TwoScaleCoefficient::uniform(int dim, SeparableSum mean, std::vector<ExpansionTerm> terms,
                                                 std::optional<double> kappa) {
  check_terms(dim, terms, mean);
  TwoScaleCoefficient c;
  c.kind_ = PriorKind::uniform;
  c.dim_ = dim;
  c.mean_ = std::move(mean);
  c.terms_ = std::move(terms);
  c.sample_fields();
  if (!(c.mean_inf_ > 0.0)) throw NumericalError("uniform coefficient: inf of the mean field must be positive");
  const double sum_b = c.sum_sup_norms();
  if (!(sum_b < c.mean_inf_)) {
    std::ostringstream os;
    os << "uniform coefficient: sum of sup-norms " << sum_b << " is not below inf of the mean " << c.mean_inf_;
    throw NumericalError(os.str());
  }
  const double minimal_kappa = sum_b / (c.mean_inf_ - sum_b);
  if (kappa) {
    if (!(*kappa > 0.0)) throw NumericalError("uniform coefficient: kappa must be positive");
    const double bound = *kappa / (1.0 + *kappa) * c.mean_inf_;
    if (sum_b > bound * (1.0 + kAdmissibilityMargin)) {
      std::ostringstream os;
      os << "uniform coefficient violates the admissibility bound: sum b_j = " << sum_b
         << " > kappa/(1+kappa) inf Abar = " << bound;
      throw NumericalError(os.str());
    }
    c.kappa_ = *kappa;
  } else {
    // J = 0 still needs a positive kappa for the bounds to be meaningful.
    c.kappa_ = minimal_kappa > 0.0 ? minimal_kappa : std::numeric_limits<double>::min();
  }
  return c;
}

TwoScaleCoefficient TwoScaleCoefficient::log_gaussian(int dim, SeparableSum offset, SeparableSum mean,
                                                      std::vector<ExpansionTerm> terms) {
  check_terms(dim, terms, mean);
  TwoScaleCoefficient c;
  c.kind_ = PriorKind::gaussian;
  c.dim_ = dim;
  c.offset_ = std::move(offset);
  c.mean_ = std::move(mean);
  c.terms_ = std::move(terms);
  c.sample_fields();
  if (c.offset_inf_ < 0.0) throw NumericalError("log-gaussian coefficient: offset field must be non-negative");
  return c;
}

void TwoScaleCoefficient::sample_fields() {
  std::tie(mean_inf_, mean_sup_) = sampled_range(mean_, dim_);
  std::tie(offset_inf_, offset_sup_) = sampled_range(offset_, dim_);
}

double TwoScaleCoefficient::sum_sup_norms() const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.sup_norm;
  return s;
}

void TwoScaleCoefficient::check_parameter(const ParameterVector& z) const {
  if (z.size() != terms_.size()) {
    throw DimensionError("parameter vector has " + std::to_string(z.size()) + " entries, coefficient has " +
                         std::to_string(terms_.size()) + " terms");
  }
}

double TwoScaleCoefficient::eval_unchecked(std::span<const double> z, const Point& x, const Point& y) const {
  double v = mean_.value(x, y);
  for (std::size_t j = 0; j < terms_.size(); ++j) v += z[j] * terms_[j].psi.value(x, y);
  if (kind_ == PriorKind::gaussian) v = offset_.value(x, y) + std::exp(v);
  return v;
}

double TwoScaleCoefficient::eval(const ParameterVector& z, const Point& x, const Point& y) const {
  check_parameter(z);
  const double v = eval_unchecked(z.values(), x, y);
  if (!std::isfinite(v) || !(v > 0.0)) {
    std::ostringstream os;
    os << "coefficient value " << v << " at x=(" << x[0] << "," << x[1] << ") y=(" << y[0] << "," << y[1]
       << ") is not positive and finite";
    throw NumericalError(os.str());
  }
  return v;
}

CoercivityBounds TwoScaleCoefficient::coercivity_bounds(const ParameterVector& z) const {
  check_parameter(z);
  if (kind_ == PriorKind::uniform) {
    const double frac = kappa_ / (1.0 + kappa_);
    return {mean_inf_ / (1.0 + kappa_), mean_sup_ + frac * mean_inf_};
  }
  double s = 0.0;
  for (std::size_t j = 0; j < terms_.size(); ++j) s += std::abs(z[j]) * terms_[j].sup_norm;
  return {offset_inf_ + std::exp(mean_inf_ - s), offset_sup_ + std::exp(mean_sup_ + s)};
}

CoefficientTable::CoefficientTable(const TwoScaleCoefficient& coeff, std::vector<Point> xs, std::vector<Point> ys)
    : coeff_(&coeff), xs_(std::move(xs)), ys_(std::move(ys)) {
  n_mean_ = coeff.mean().terms.size();
  n_offset_ = coeff.offset().terms.size();
  const std::size_t nterms = n_mean_ + n_offset_ + coeff.size();
  const int d = coeff.dim();
  tx_.resize(nterms * xs_.size());
  ty_.resize(nterms * ys_.size());
  auto fill = [&](std::size_t slot, const SeparableTerm& t) {
    for (std::size_t p = 0; p < xs_.size(); ++p) {
      double v = t.scale;
      for (int i = 0; i < d; ++i) v *= t.x_factors[i].value(xs_[p][i]);
      tx_[slot * xs_.size() + p] = v;
    }
    for (std::size_t q = 0; q < ys_.size(); ++q) {
      double v = 1.0;
      for (int i = 0; i < d; ++i) v *= t.y_factors[i].value(ys_[q][i]);
      ty_[slot * ys_.size() + q] = v;
    }
  };
  std::size_t slot = 0;
  for (const auto& t : coeff.mean().terms) fill(slot++, t);
  for (const auto& t : coeff.offset().terms) fill(slot++, t);
  for (const auto& t : coeff.terms()) fill(slot++, t.psi);
}

void CoefficientTable::evaluate_row(const ParameterVector& z, std::size_t ix, std::span<double> out) const {
  coeff_->check_parameter(z);
  const std::size_t ny = ys_.size(), nx = xs_.size();
  if (out.size() != ny) throw DimensionError("CoefficientTable::evaluate_row: output size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  auto accumulate = [&](std::size_t slot, double w) {
    const double a = w * tx_[slot * nx + ix];
    if (a == 0.0) return;
    const double* ty = &ty_[slot * ny];
    for (std::size_t q = 0; q < ny; ++q) out[q] += a * ty[q];
  };
  for (std::size_t s = 0; s < n_mean_; ++s) accumulate(s, 1.0);
  const std::size_t first_term = n_mean_ + n_offset_;
  for (std::size_t j = 0; j < coeff_->size(); ++j) accumulate(first_term + j, z[j]);
  if (coeff_->kind() == PriorKind::gaussian) {
    for (double& v : out) v = std::exp(v);
    for (std::size_t s = 0; s < n_offset_; ++s) accumulate(n_mean_ + s, 1.0);
  }
  for (std::size_t q = 0; q < ny; ++q) {
    if (!std::isfinite(out[q]) || !(out[q] > 0.0)) {
      std::ostringstream os;
      os << "coefficient value " << out[q] << " is not positive and finite at tabulated point (" << ix << ","
         << q << ")";
      throw NumericalError(os.str());
    }
  }
}

std::vector<double> CoefficientTable::evaluate(const ParameterVector& z) const {
  std::vector<double> out(xs_.size() * ys_.size());
  for (std::size_t ix = 0; ix < xs_.size(); ++ix)
    evaluate_row(z, ix, std::span<double>(out).subspan(ix * ys_.size(), ys_.size()));
  return out;
}

ParameterVector sample_prior(PriorKind kind, std::size_t count, std::mt19937_64& rng) {
  std::vector<double> z(count);
  if (kind == PriorKind::uniform) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : z) v = dist(rng);
  } else {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : z) v = dist(rng);
  }
  return ParameterVector(std::move(z));
}

ParameterVector sample_prior(PriorKind kind, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_prior(kind, count, rng);
}

}  // namespace twoscale
