#include "twoscale/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "twoscale/csv.hpp"

namespace twoscale {
namespace {

std::string describe(const ParameterVector& z) {
  std::string s = "(";
  for (std::size_t j = 0; j < z.size(); ++j) s += (j ? ", " : "") + format_double(z[j]);
  return s + ")";
}

// Fixed number of reduction blocks so sums do not depend on the thread count.
constexpr std::size_t kBlocks = 64;

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Hellinger distance of the resampled draw set idx.
double hellinger_indexed(std::span<const double> a, std::span<const double> b, const std::vector<std::size_t>& idx) {
  double ma = std::numeric_limits<double>::infinity(), mb = ma;
  for (std::size_t k : idx) ma = std::min(ma, a[k]), mb = std::min(mb, b[k]);
  double sa = 0.0, sb = 0.0;
  for (std::size_t k : idx) {
    sa += std::exp(-(a[k] - ma));
    sb += std::exp(-(b[k] - mb));
  }
  const double n = static_cast<double>(idx.size());
  const double ra = 1.0 / std::sqrt(sa / n), rb = 1.0 / std::sqrt(sb / n);
  double d2 = 0.0;
  for (std::size_t k : idx) {
    const double diff = std::exp(-0.5 * (a[k] - ma)) * ra - std::exp(-0.5 * (b[k] - mb)) * rb;
    d2 += diff * diff;
  }
  return std::sqrt(std::clamp(0.5 * d2 / n, 0.0, 1.0));
}

std::vector<std::size_t> identity_index(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<std::size_t> resample(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& k : idx) k = pick(rng);
  return idx;
}

}  // namespace

PosteriorModel::PosteriorModel(PriorKind prior, std::shared_ptr<const ForwardModel> forward, ForwardData data)
    : prior_(prior), forward_(std::move(forward)), data_(std::move(data)), misfit_(data_) {
  if (!forward_) throw DimensionError("PosteriorModel: missing forward model");
  if (forward_->observations() != data_.size())
    throw DimensionError("PosteriorModel: forward model has " + std::to_string(forward_->observations()) +
                         " observations but the data has " + std::to_string(data_.size()));
}

double PosteriorModel::potential(const ParameterVector& z) const {
  std::vector<double> g;
  try {
    g = forward_->evaluate(z);
  } catch (const Error& e) {
    throw NumericalError("forward solve failed at z = " + describe(z) + ": " + e.what());
  }
  const double phi = misfit_(g);
  if (!std::isfinite(phi)) throw NumericalError("non-finite potential at z = " + describe(z));
  return phi;
}

std::vector<double> PosteriorModel::potentials(const std::vector<ParameterVector>& zs) const {
  std::vector<double> phi(zs.size(), 0.0);
  std::vector<std::exception_ptr> errors(zs.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(zs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      phi[k] = potential(zs[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return phi;
}

std::vector<ParameterVector> prior_draws(PriorKind kind, std::size_t parameters, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ParameterVector> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(sample_prior(kind, parameters, rng));
  return out;
}

double acceptance_probability(double phi_current, double phi_proposal) {
  return std::min(1.0, std::exp(phi_current - phi_proposal));
}

std::vector<double> PosteriorChain::mean() const {
  if (samples.empty()) return {};
  const std::size_t j = samples[0].size();
  std::vector<double> m(j, 0.0);
  const std::size_t n = samples.size() - burn_in;
  for (std::size_t k = burn_in; k < samples.size(); ++k)
    for (std::size_t i = 0; i < j; ++i) m[i] += samples[k][i];
  for (double& v : m) v /= static_cast<double>(n);
  return m;
}

std::vector<double> PosteriorChain::stddev() const {
  if (samples.empty()) return {};
  const std::size_t j = samples[0].size();
  const auto m = mean();
  std::vector<double> s(j, 0.0);
  const std::size_t n = samples.size() - burn_in;
  if (n < 2) return s;
  for (std::size_t k = burn_in; k < samples.size(); ++k)
    for (std::size_t i = 0; i < j; ++i) s[i] += (samples[k][i] - m[i]) * (samples[k][i] - m[i]);
  for (double& v : s) v = std::sqrt(v / static_cast<double>(n - 1));
  return s;
}

PosteriorChain run_independence_sampler(const PosteriorModel& model, const SamplerOptions& options) {
  if (options.steps < 1) throw ConfigError("sampler: at least one step is required");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0))
    throw ConfigError("sampler: burn-in fraction must lie in [0, 1)");
  const std::size_t j = model.parameters();
  const std::size_t batch = std::max<std::size_t>(options.batch, 1);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  PosteriorChain chain;
  chain.seed = options.seed;
  chain.burn_in = std::min(options.steps - 1,
                           static_cast<std::size_t>(options.burn_in_fraction * static_cast<double>(options.steps)));
  chain.samples.reserve(options.steps);
  chain.potentials.reserve(options.steps);
  chain.accepted.reserve(options.steps);

  ParameterVector current = sample_prior(model.prior(), j, rng);
  double phi = model.potential(current);
  chain.samples.push_back(current);
  chain.potentials.push_back(phi);
  chain.accepted.push_back(1);

  std::size_t accepted = 0;
  for (std::size_t done = 1; done < options.steps;) {
    const std::size_t m = std::min(batch, options.steps - done);
    std::vector<ParameterVector> proposals;
    std::vector<double> u(m);
    proposals.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      proposals.push_back(sample_prior(model.prior(), j, rng));
      u[k] = uniform(rng);
    }
    const auto phis = model.potentials(proposals);
    for (std::size_t k = 0; k < m; ++k) {
      // u < exp(phi - phi'), written in log form so that a common shift of
      // the potential cannot change a decision through overflow.
      const bool accept = std::log(u[k]) < phi - phis[k];
      if (accept) {
        current = proposals[k];
        phi = phis[k];
        ++accepted;
      }
      chain.samples.push_back(current);
      chain.potentials.push_back(phi);
      chain.accepted.push_back(accept ? 1 : 0);
    }
    done += m;
  }
  chain.acceptance_rate =
      options.steps > 1 ? static_cast<double>(accepted) / static_cast<double>(options.steps - 1) : 0.0;
  return chain;
}

NormalizerEstimate normalizer_from_potentials(std::span<const double> phi) {
  if (phi.empty()) throw DimensionError("normalizer: no potentials");
  const double lo = *std::min_element(phi.begin(), phi.end());
  const double n = static_cast<double>(phi.size());
  double s = 0.0, s2 = 0.0;
  for (double p : phi) {
    const double e = std::exp(-(p - lo));
    s += e;
    s2 += e * e;
  }
  const double mean = s / n;
  const double var = phi.size() > 1 ? std::max(0.0, (s2 / n - mean * mean) * n / (n - 1)) : 0.0;
  NormalizerEstimate z;
  z.log_value = -lo + std::log(mean);
  z.value = std::exp(z.log_value);
  z.std_error = std::exp(-lo) * std::sqrt(var / n);
  z.max_potential = *std::max_element(phi.begin(), phi.end());
  return z;
}

NormalizerEstimate estimate_normalizer(const PosteriorModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("normalizer: at least one draw is required");
  const auto phi = model.potentials(prior_draws(model.prior(), model.parameters(), n, seed));
  return normalizer_from_potentials(phi);
}

double hellinger_distance(std::span<const double> phi_a, std::span<const double> phi_b) {
  if (phi_a.size() != phi_b.size() || phi_a.empty()) throw DimensionError("hellinger: potential sets differ in size");
  return hellinger_indexed(phi_a, phi_b, identity_index(phi_a.size()));
}

HellingerEstimate hellinger_from_potentials(std::span<const double> phi_a, std::span<const double> phi_b,
                                            std::size_t bootstrap, std::uint64_t seed) {
  HellingerEstimate h;
  h.distance = hellinger_distance(phi_a, phi_b);
  h.samples = phi_a.size();
  h.log_z_a = normalizer_from_potentials(phi_a).log_value;
  h.log_z_b = normalizer_from_potentials(phi_b).log_value;
  if (!std::isfinite(h.log_z_a) || !std::isfinite(h.log_z_b))
    throw NumericalError("hellinger: normalizer underflow (log Z_a = " + format_double(h.log_z_a) +
                         ", log Z_b = " + format_double(h.log_z_b) + ")");
  h.ci_low = h.ci_high = h.distance;
  if (bootstrap > 1) {
    std::mt19937_64 rng(seed);
    std::vector<double> reps(bootstrap);
    for (auto& r : reps) r = hellinger_indexed(phi_a, phi_b, resample(phi_a.size(), rng));
    h.bootstrap_std = stddev_of(reps);
    h.ci_low = quantile(reps, 0.025);
    h.ci_high = quantile(reps, 0.975);
  }
  return h;
}

HellingerEstimate hellinger_estimate(const PosteriorModel& a, const PosteriorModel& b, std::size_t n,
                                     std::uint64_t seed, std::size_t bootstrap) {
  if (a.prior() != b.prior() || a.parameters() != b.parameters())
    throw DimensionError("hellinger: models must share the prior");
  const auto draws = prior_draws(a.prior(), a.parameters(), n, seed);
  const auto pa = a.potentials(draws);
  const auto pb = b.potentials(draws);
  return hellinger_from_potentials(pa, pb, bootstrap, seed + 1);
}

HellingerStudy hellinger_rate_study(const PosteriorModel& reference,
                                    const std::vector<std::pair<double, const PosteriorModel*>>& ladder,
                                    LadderKind kind, std::size_t n, std::uint64_t seed, std::size_t bootstrap) {
  if (ladder.size() < 3) throw ConfigError("hellinger study: at least three rungs are required");
  for (const auto& [p, m] : ladder)
    if (m->prior() != reference.prior() || m->parameters() != reference.parameters())
      throw DimensionError("hellinger study: models must share the prior");
  const auto draws = prior_draws(reference.prior(), reference.parameters(), n, seed);
  const auto ref = reference.potentials(draws);
  std::vector<std::vector<double>> phi;
  for (const auto& rung : ladder) phi.push_back(rung.second->potentials(draws));

  HellingerStudy study;
  std::vector<double> xs, ds;
  for (std::size_t r = 0; r < ladder.size(); ++r) {
    study.rungs.push_back({ladder[r].first, hellinger_from_potentials(phi[r], ref, bootstrap, seed + 1 + r)});
    xs.push_back(kind == LadderKind::epsilon ? ladder[r].first : std::ldexp(1.0, -static_cast<int>(ladder[r].first)));
    ds.push_back(study.rungs.back().estimate.distance);
  }
  study.monotone = true;
  for (std::size_t r = 1; r < ds.size(); ++r) study.monotone = study.monotone && ds[r] < ds[r - 1];

  for (const auto& rung : study.rungs)
    if (rung.estimate.distance <= 2.0 * rung.estimate.bootstrap_std) {
      study.note = "Monte-Carlo error exceeds the signal at parameter " + format_double(rung.parameter);
      return study;
    }
  study.fit = fit_loglog(xs, ds);
  if (bootstrap > 1) {
    // Joint resampling keeps the correlation between rungs from shared draws.
    std::mt19937_64 rng(seed + 1000003);
    std::vector<double> slopes;
    for (std::size_t b = 0; b < bootstrap; ++b) {
      const auto idx = resample(n, rng);
      std::vector<double> d(ladder.size());
      for (std::size_t r = 0; r < ladder.size(); ++r) d[r] = hellinger_indexed(phi[r], ref, idx);
      if (std::all_of(d.begin(), d.end(), [](double v) { return v > 0.0; })) slopes.push_back(fit_loglog(xs, d).slope);
    }
    study.slope_bootstrap_std = stddev_of(slopes);
  }
  return study;
}

std::string hellinger_study_csv(const HellingerStudy& study, LadderKind kind) {
  CsvWriter w({kind == LadderKind::epsilon ? "epsilon" : "level", "hellinger", "bootstrap_std", "ci_low", "ci_high"});
  for (const auto& r : study.rungs)
    w.row({r.parameter, r.estimate.distance, r.estimate.bootstrap_std, r.estimate.ci_low, r.estimate.ci_high});
  std::string out = w.str();
  if (study.fit)
    out += "# slope " + format_double(study.fit->slope) + " stderr " + format_double(study.fit->stderr_slope) +
           " bootstrap_std " + format_double(study.slope_bootstrap_std) + "\n";
  else
    out += "# no slope: " + study.note + "\n";
  return out;
}

FieldMoments posterior_field_moments(const PosteriorChain& chain, const TwoScaleCoefficient& coeff,
                                     const std::vector<Point>& xs, const std::vector<Point>& ys) {
  if (chain.size() <= chain.burn_in) throw DimensionError("posterior field: empty chain");
  const CoefficientTable table(coeff, xs, ys);
  const std::size_t cells = xs.size() * ys.size();
  const std::size_t first = chain.burn_in, count = chain.size() - first;
  const std::size_t blocks = std::min(kBlocks, count);
  std::vector<std::vector<double>> s1(blocks, std::vector<double>(cells, 0.0)), s2 = s1;
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = first + count * b / blocks, hi = first + count * (b + 1) / blocks;
    for (std::size_t k = lo; k < hi; ++k) {
      const auto a = table.evaluate(chain.samples[k]);
      for (std::size_t i = 0; i < cells; ++i) {
        s1[b][i] += a[i];
        s2[b][i] += a[i] * a[i];
      }
    }
  }
  FieldMoments f;
  f.mean.assign(cells, 0.0);
  f.variance.assign(cells, 0.0);
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < cells; ++i) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) a += s1[k][i], b += s2[k][i];
    f.mean[i] = a / n;
    f.variance[i] = std::max(0.0, b / n - f.mean[i] * f.mean[i]);
  }
  return f;
}

double integrability_moment(const TwoScaleCoefficient& coeff, PriorKind prior, double beta, std::size_t n,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto z = sample_prior(prior, coeff.size(), rng);
    double e = 0.0;
    for (std::size_t j = 0; j < coeff.size(); ++j) e += std::abs(z[j]) * coeff.terms()[j].sup_norm;
    s += std::exp(beta * e);
  }
  return s / static_cast<double>(n);
}

std::string chain_csv(const PosteriorChain& chain) {
  const std::size_t j = chain.samples.empty() ? 0 : chain.samples[0].size();
  std::ostringstream os;
  os << "step";
  for (std::size_t i = 0; i < j; ++i) os << ",z_" << i + 1;
  os << ",potential,accepted\n";
  for (std::size_t k = 0; k < chain.size(); ++k) {
    os << k;
    for (std::size_t i = 0; i < j; ++i) os << ',' << format_double(chain.samples[k][i]);
    os << ',' << format_double(chain.potentials[k]) << ',' << int(chain.accepted[k]) << '\n';
  }
  return os.str();
}

std::string scatter_csv(const PosteriorChain& chain) {
  const bool two = !chain.samples.empty() && chain.samples[0].size() > 1;
  CsvWriter w(two ? std::vector<std::string>{"z_1", "z_2"} : std::vector<std::string>{"z_1"});
  for (const auto& z : chain.samples) {
    if (two)
      w.row({z[0], z[1]});
    else
      w.row({z[0]});
  }
  return w.str();
}

std::string chain_summary(const PosteriorChain& chain) {
  std::ostringstream os;
  os << "steps = " << chain.size() << "\n";
  os << "burn_in = " << chain.burn_in << "\n";
  os << "seed = " << chain.seed << "\n";
  os << "acceptance_rate = " << format_double(chain.acceptance_rate) << "\n";
  const auto m = chain.mean();
  const auto s = chain.stddev();
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << "mean_z_" << i + 1 << " = " << format_double(m[i]) << "\n";
    os << "std_z_" << i + 1 << " = " << format_double(s[i]) << "\n";
  }
  return os.str();
}

}  // namespace twoscale
