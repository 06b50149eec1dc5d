#include "twoscale/cg.hpp"

#include <cmath>
#include <vector>

#include "twoscale/types.hpp"

namespace twoscale {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CgResult conjugate_gradient(const LinearMap& apply, std::span<const double> inverse_diagonal,
                            std::span<const double> rhs, std::span<double> x, const CgOptions& options) {
  const std::size_t n = rhs.size();
  if (x.size() != n || (!inverse_diagonal.empty() && inverse_diagonal.size() != n))
    throw DimensionError("conjugate_gradient: size mismatch");

  std::vector<double> r(n), z(n), p(n), q(n);
  apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];

  const double bnorm = std::sqrt(dot(rhs, rhs));
  if (bnorm == 0.0) {
    for (auto& v : x) v = 0.0;
    return {0, 0.0};
  }
  auto precondition = [&] {
    if (inverse_diagonal.empty()) {
      z = r;
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = inverse_diagonal[i] * r[i];
    }
  };

  precondition();
  p = z;
  double rz = dot(r, z);
  double rel = std::sqrt(dot(r, r)) / bnorm;
  std::size_t it = 0;
  while (rel > options.relative_tolerance) {
    if (it == options.max_iterations) throw SolverError("conjugate gradients did not converge", it, rel);
    apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0) || !std::isfinite(pq))
      throw SolverError("conjugate gradients broke down (operator not positive definite)", it, rel);
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    precondition();
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rel = std::sqrt(dot(r, r)) / bnorm;
    ++it;
  }
  return {it, rel};
}

}  // namespace twoscale
