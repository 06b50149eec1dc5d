#include "twoscale/wavelet.hpp"

#include <cmath>
#include <stdexcept>

#include "twoscale/types.hpp"

namespace twoscale {
namespace {

struct Stencil {
  double left, center, right;
};

// Unit-height stencil of function k (1-based) out of m at one level, on the
// nodes 2k-2, 2k-1, 2k of that level's mesh.
Stencil stencil(WaveletKind kind, std::size_t k, std::size_t m) {
  if (kind == WaveletKind::interval_l2) {
    if (k == 1) return {-2.0, 2.0, -1.0};
    if (k == m) return {-1.0, 2.0, -2.0};
  } else {
    if (k == 1) return {0.0, 2.0, -1.0};
    if (k == m) return {-1.0, 2.0, 0.0};
  }
  return {-1.0, 2.0, -1.0};
}

// Gauge (vanishing at both ends) part of the periodic basis starts at index 1.
std::size_t gauge_shift(WaveletKind kind) { return kind == WaveletKind::periodic ? 1 : 0; }

}  // namespace

WaveletBasis1d::WaveletBasis1d(WaveletKind kind, int finest_level) : kind_(kind), level_(finest_level) {
  if (finest_level < 0) throw std::invalid_argument("WaveletBasis1d: level must be >= 0");
  size_ = level_offset(kind, finest_level) + level_count(kind, finest_level);
  mass_.resize(size_);
  stiffness_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const auto v = own_level_values(i);
    const double h = 1.0 / static_cast<double>(v.size() - 1);
    double m = 0.0, s = 0.0;
    for (std::size_t c = 0; c + 1 < v.size(); ++c) {
      m += h / 3.0 * (v[c] * v[c] + v[c] * v[c + 1] + v[c + 1] * v[c + 1]);
      s += (v[c + 1] - v[c]) * (v[c + 1] - v[c]) / h;
    }
    mass_[i] = m;
    stiffness_[i] = s;
  }
}

std::size_t WaveletBasis1d::level_offset(WaveletKind kind, int level) {
  if (level == 0) return 0;
  const std::size_t p = std::size_t{1} << level;
  switch (kind) {
    case WaveletKind::interval_l2: return p + 1;
    case WaveletKind::interval_h10: return p - 1;
    case WaveletKind::periodic: return p;
  }
  return 0;
}

std::size_t WaveletBasis1d::level_count(WaveletKind kind, int level) {
  if (level > 0) return std::size_t{1} << level;
  switch (kind) {
    case WaveletKind::interval_l2: return 3;
    case WaveletKind::interval_h10: return 1;
    case WaveletKind::periodic: return 2;
  }
  return 0;
}

int WaveletBasis1d::level_of(std::size_t index) const {
  int l = 0;
  while (l < level_ && index >= level_offset(kind_, l + 1)) ++l;
  return l;
}

double WaveletBasis1d::level_scale(WaveletKind kind, int level) {
  if (level == 0) return 1.0;
  const double s = std::pow(2.0, 0.5 * level);
  return kind == WaveletKind::interval_l2 ? s : 1.0 / s;
}

std::vector<double> WaveletBasis1d::own_level_values(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("WaveletBasis1d: index out of range");
  const int l = level_of(index);
  const std::size_t nl = cells_at_level(l);
  std::vector<double> v(nl + 1, 0.0);
  if (l == 0) {
    switch (kind_) {
      case WaveletKind::interval_l2: v[index] = 1.0; break;
      case WaveletKind::interval_h10: v[1] = 1.0; break;
      case WaveletKind::periodic:
        if (index == 0) {
          v.assign(nl + 1, 1.0);
        } else {
          v[1] = 1.0;
        }
        break;
    }
    return v;
  }
  const std::size_t m = level_count(kind_, l);
  const std::size_t k = index - level_offset(kind_, l) + 1;
  const Stencil st = stencil(kind_, k, m);
  const double s = level_scale(kind_, l);
  v[2 * k - 2] = s * st.left;
  v[2 * k - 1] = s * st.center;
  v[2 * k] = s * st.right;
  return v;
}

double WaveletBasis1d::eval(std::size_t index, double t) const {
  const auto v = own_level_values(index);
  const std::size_t nl = v.size() - 1;
  if (kind_ == WaveletKind::periodic) t -= std::floor(t);
  if (t <= 0.0) return v.front();
  if (t >= 1.0) return v.back();
  const double u = t * static_cast<double>(nl);
  const std::size_t c = std::min(static_cast<std::size_t>(u), nl - 1);
  const double s = u - static_cast<double>(c);
  return (1.0 - s) * v[c] + s * v[c + 1];
}

std::vector<double> WaveletBasis1d::fine_nodal_values(std::size_t index) const {
  const std::size_t n = cells_at_level(level_);
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out[i] = eval(index, static_cast<double>(i) / static_cast<double>(n));
  return out;
}

double WaveletBasis1d::mass(std::size_t index) const { return mass_.at(index); }
double WaveletBasis1d::stiffness(std::size_t index) const { return stiffness_.at(index); }

void WaveletBasis1d::to_nodal(std::span<const double> coeffs, std::span<double> nodal) const {
  if (coeffs.size() != size_ || nodal.size() != size_) throw DimensionError("WaveletBasis1d::to_nodal: size mismatch");
  const std::size_t n = cells_at_level(level_);
  thread_local std::vector<double> cur, next;
  cur.assign(n + 1, 0.0);
  next.assign(n + 1, 0.0);
  const std::size_t g = gauge_shift(kind_);
  if (kind_ == WaveletKind::interval_l2) {
    cur[0] = coeffs[0];
    cur[1] = coeffs[1];
    cur[2] = coeffs[2];
  } else {
    cur[0] = 0.0;
    cur[1] = coeffs[g];
    cur[2] = 0.0;
  }
  for (int l = 1; l <= level_; ++l) {
    const std::size_t coarse = cells_at_level(l - 1);
    for (std::size_t i = 0; i < coarse; ++i) {
      next[2 * i] = cur[i];
      next[2 * i + 1] = 0.5 * (cur[i] + cur[i + 1]);
    }
    next[2 * coarse] = cur[coarse];
    const std::size_t m = level_count(kind_, l);
    const std::size_t off = level_offset(kind_, l);
    const double s = level_scale(kind_, l);
    for (std::size_t k = 1; k <= m; ++k) {
      const double w = s * coeffs[off + k - 1];
      const Stencil st = stencil(kind_, k, m);
      next[2 * k - 2] += st.left * w;
      next[2 * k - 1] += st.center * w;
      next[2 * k] += st.right * w;
    }
    std::swap(cur, next);
  }
  switch (kind_) {
    case WaveletKind::interval_l2:
      for (std::size_t i = 0; i <= n; ++i) nodal[i] = cur[i];
      break;
    case WaveletKind::interval_h10:
      for (std::size_t i = 1; i < n; ++i) nodal[i - 1] = cur[i];
      break;
    case WaveletKind::periodic:
      for (std::size_t i = 0; i < n; ++i) nodal[i] = cur[i] + coeffs[0];
      break;
  }
}

void WaveletBasis1d::to_nodal_transpose(std::span<const double> nodal, std::span<double> coeffs) const {
  if (coeffs.size() != size_ || nodal.size() != size_)
    throw DimensionError("WaveletBasis1d::to_nodal_transpose: size mismatch");
  const std::size_t n = cells_at_level(level_);
  thread_local std::vector<double> cur, prev;
  cur.assign(n + 1, 0.0);
  prev.assign(n + 1, 0.0);
  switch (kind_) {
    case WaveletKind::interval_l2:
      for (std::size_t i = 0; i <= n; ++i) cur[i] = nodal[i];
      break;
    case WaveletKind::interval_h10:
      for (std::size_t i = 1; i < n; ++i) cur[i] = nodal[i - 1];
      break;
    case WaveletKind::periodic: {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += nodal[i];
      coeffs[0] = total;
      for (std::size_t i = 1; i < n; ++i) cur[i] = nodal[i];
      break;
    }
  }
  for (int l = level_; l >= 1; --l) {
    const std::size_t m = level_count(kind_, l);
    const std::size_t off = level_offset(kind_, l);
    const double s = level_scale(kind_, l);
    for (std::size_t k = 1; k <= m; ++k) {
      const Stencil st = stencil(kind_, k, m);
      coeffs[off + k - 1] = s * (st.left * cur[2 * k - 2] + st.center * cur[2 * k - 1] + st.right * cur[2 * k]);
    }
    const std::size_t coarse = cells_at_level(l - 1);
    for (std::size_t i = 0; i <= coarse; ++i) {
      double v = cur[2 * i];
      if (i > 0) v += 0.5 * cur[2 * i - 1];
      if (i < coarse) v += 0.5 * cur[2 * i + 1];
      prev[i] = v;
    }
    std::swap(cur, prev);
  }
  if (kind_ == WaveletKind::interval_l2) {
    coeffs[0] = cur[0];
    coeffs[1] = cur[1];
    coeffs[2] = cur[2];
  } else {
    coeffs[gauge_shift(kind_)] = cur[1];
  }
}

void transform_axis(const WaveletBasis1d& basis, std::span<double> data, std::span<const std::size_t> shape,
                    int axis, bool transpose, bool parallel) {
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  if (len != basis.size() || outer * inner * len != data.size())
    throw DimensionError("transform_axis: shape does not match data or basis");
  const std::ptrdiff_t lines = static_cast<std::ptrdiff_t>(outer * inner);
  const bool use_threads = parallel && lines > 1 && data.size() > (1u << 14);
#pragma omp parallel if (use_threads)
  {
    std::vector<double> in(len), out(len);
#pragma omp for schedule(static)
    for (std::ptrdiff_t line = 0; line < lines; ++line) {
      const std::size_t o = static_cast<std::size_t>(line) / inner;
      const std::size_t i = static_cast<std::size_t>(line) % inner;
      double* base = data.data() + o * len * inner + i;
      for (std::size_t k = 0; k < len; ++k) in[k] = base[k * inner];
      if (transpose) {
        basis.to_nodal_transpose(in, out);
      } else {
        basis.to_nodal(in, out);
      }
      for (std::size_t k = 0; k < len; ++k) base[k * inner] = out[k];
    }
  }
}

}  // namespace twoscale
