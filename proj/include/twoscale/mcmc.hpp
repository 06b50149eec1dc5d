#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twoscale/coefficient.hpp"
#include "twoscale/fine_scale.hpp"
#include "twoscale/forward_models.hpp"
#include "twoscale/observation.hpp"

namespace twoscale {

/// Posterior d rho^delta / d rho  ~  exp(-Phi(z; delta)) for one forward map.
class PosteriorModel {
 public:
  PosteriorModel(PriorKind prior, std::shared_ptr<const ForwardModel> forward, ForwardData data);

  PriorKind prior() const { return prior_; }
  std::size_t parameters() const { return forward_->parameters(); }
  const ForwardModel& forward() const { return *forward_; }
  const ForwardData& data() const { return data_; }

  /// Phi(z); solver failures are rethrown as NumericalError naming z.
  double potential(const ParameterVector& z) const;
  /// Phi at every z, in parallel; the lowest failing index is reported.
  std::vector<double> potentials(const std::vector<ParameterVector>& zs) const;

 private:
  PriorKind prior_;
  std::shared_ptr<const ForwardModel> forward_;
  ForwardData data_;
  Misfit misfit_;
};

/// n i.i.d. prior draws from one sequential mt19937_64 stream.
std::vector<ParameterVector> prior_draws(PriorKind kind, std::size_t parameters, std::size_t n, std::uint64_t seed);

/// min(1, exp(Phi_current - Phi_proposal)).
double acceptance_probability(double phi_current, double phi_proposal);

struct PosteriorChain {
  std::vector<ParameterVector> samples;
  std::vector<double> potentials;
  std::vector<char> accepted;  // sample k came from an accepted proposal
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  double acceptance_rate = 0.0;  // over proposals 1..n-1

  std::size_t size() const { return samples.size(); }
  std::vector<double> mean() const;    // post burn-in
  std::vector<double> stddev() const;  // post burn-in
};

struct SamplerOptions {
  std::size_t steps = 1000;
  std::uint64_t seed = 1;
  double burn_in_fraction = 0.1;
  std::size_t batch = 512;  // proposals evaluated together
};

/// Independence sampler with the prior as proposal. Sample 0 is a prior
/// draw; each later step draws J proposal coordinates and then one uniform
/// from the same stream, so the chain depends only on the seed. Proposals do
/// not depend on the state, so their potentials are computed in parallel
/// batches before the sequential accept/reject sweep.
PosteriorChain run_independence_sampler(const PosteriorModel& model, const SamplerOptions& options);

struct NormalizerEstimate {
  double value = 0.0;      // mean of exp(-Phi)
  double std_error = 0.0;  // of value
  double log_value = 0.0;
  double max_potential = 0.0;
};

NormalizerEstimate normalizer_from_potentials(std::span<const double> phi);
NormalizerEstimate estimate_normalizer(const PosteriorModel& model, std::size_t n, std::uint64_t seed);

struct HellingerEstimate {
  double distance = 0.0;
  double bootstrap_std = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 2.5% and 97.5% bootstrap quantiles
  double log_z_a = 0.0, log_z_b = 0.0;
  std::size_t samples = 0;
};

/// d^2 = 1/2 mean[(exp(-Phi_a/2)/sqrt(Z_a) - exp(-Phi_b/2)/sqrt(Z_b))^2] with
/// both Z estimated from the same draws.
double hellinger_distance(std::span<const double> phi_a, std::span<const double> phi_b);
HellingerEstimate hellinger_from_potentials(std::span<const double> phi_a, std::span<const double> phi_b,
                                            std::size_t bootstrap = 200, std::uint64_t seed = 1);
/// Throws DimensionError unless both models share the prior.
HellingerEstimate hellinger_estimate(const PosteriorModel& a, const PosteriorModel& b, std::size_t n,
                                     std::uint64_t seed, std::size_t bootstrap = 200);

struct HellingerRung {
  double parameter = 0.0;  // epsilon, or the level L
  HellingerEstimate estimate;
};

struct HellingerStudy {
  std::vector<HellingerRung> rungs;
  bool monotone = false;  // distances strictly decrease along the ladder
  std::optional<LogLogFit> fit;
  double slope_bootstrap_std = 0.0;
  std::string note;  // why the fit was refused, if it was
};

enum class LadderKind { epsilon, level };

/// Every rung is compared with `reference` on one shared draw set. The
/// slope is fitted against epsilon, or against h = 2^-L for level ladders,
/// and its Monte-Carlo error comes from resampling all rungs jointly.
HellingerStudy hellinger_rate_study(const PosteriorModel& reference,
                                    const std::vector<std::pair<double, const PosteriorModel*>>& ladder,
                                    LadderKind kind, std::size_t n, std::uint64_t seed, std::size_t bootstrap = 200);

/// "parameter,hellinger,bootstrap_std,ci_low,ci_high" plus a fit comment line.
std::string hellinger_study_csv(const HellingerStudy& study, LadderKind kind);

struct FieldMoments {
  std::vector<double> mean, variance;  // row-major over (xs, ys)
};

/// Pointwise mean and variance of A(z_k; x, y) over the post burn-in samples.
FieldMoments posterior_field_moments(const PosteriorChain& chain, const TwoScaleCoefficient& coeff,
                                     const std::vector<Point>& xs, const std::vector<Point>& ys);

/// Monte-Carlo mean of exp(beta sum_j |z_j| b_j) under the prior.
double integrability_moment(const TwoScaleCoefficient& coeff, PriorKind prior, double beta, std::size_t n,
                            std::uint64_t seed);

/// "step,z_1,...,z_J,potential,accepted".
std::string chain_csv(const PosteriorChain& chain);
/// "z_1,z_2" (or "z_1" when J = 1) for every sample.
std::string scatter_csv(const PosteriorChain& chain);
/// key = value lines: steps, burn-in, acceptance rate, mean and std per coordinate.
std::string chain_summary(const PosteriorChain& chain);

}  // namespace twoscale
