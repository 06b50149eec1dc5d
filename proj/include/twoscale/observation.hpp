#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twoscale/catalogue.hpp"
#include "twoscale/cell_problem.hpp"
#include "twoscale/coefficient.hpp"
#include "twoscale/fine_scale.hpp"
#include "twoscale/homogenized.hpp"
#include "twoscale/two_scale.hpp"

namespace twoscale {

/// Observation functionals O_1..O_N of one experiment.
struct ObservationSpec {
  int dim = 1;
  std::vector<ObservationFunctional> functionals;

  std::size_t size() const { return functionals.size(); }
  bool has_flux() const;
  static ObservationSpec from_ids(const std::vector<std::string>& ids, int dim);
};

/// O_i^0 = int_D int_Y l_i . (grad u0 + grad_y u1) dy dx, or the flux
/// int_D int_Y l_i A (grad u0 + grad_y u1) for flux functionals, on the
/// two-scale Galerkin solution.
std::vector<double> forward_map_homogenized(const ObservationSpec& spec, const TwoScaleSolution& sol,
                                            const TwoScaleCoefficient& coeff, const ParameterVector& z);

/// Same functionals with u1 = sum_l d_l u0 w^l from cell solutions; the
/// flux uses the cell coefficient the cell problems were solved with.
std::vector<double> forward_map_homogenized(const ObservationSpec& spec, const MacroField& u0,
                                            const CellSolutionSet& cells);

/// O_i^eps = int_D l_i(x, x/eps) . grad u^eps dx (flux: with A^eps inserted).
std::vector<double> forward_map_eps(const ObservationSpec& spec, const Eps1dSolution& sol);
std::vector<double> forward_map_eps(const ObservationSpec& spec, const FineFemSolution& sol,
                                    const TwoScaleCoefficient& coeff, const ParameterVector& z, double epsilon);

/// Observed data delta = G(z_ref) + nu, nu ~ N(0, Sigma).
struct ForwardData {
  std::vector<double> delta;
  Eigen::MatrixXd sigma;
  bool diagonal = true;  // how sigma is written to the data file
  std::optional<std::uint64_t> noise_seed;
  std::optional<ParameterVector> z_ref;

  std::size_t size() const { return delta.size(); }
};

/// Phi = 1/2 (delta - G)^T Sigma^{-1} (delta - G) with a cached Cholesky
/// factor. Throws NumericalError if Sigma is not positive definite.
class Misfit {
 public:
  explicit Misfit(const ForwardData& data);
  double operator()(std::span<const double> g) const;
  std::size_t size() const { return delta_.size(); }

 private:
  std::vector<double> delta_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<double> inv_diag_;  // non-empty when sigma is diagonal
};

double potential(std::span<const double> g, const ForwardData& data);

/// Draws nu with the given seed and returns delta = g0 + nu.
ForwardData synthesize_data(const std::vector<double>& g0, const Eigen::MatrixXd& sigma, std::uint64_t noise_seed,
                            std::optional<ParameterVector> z_ref = std::nullopt);

/// Plain-text data file with shortest round-trip decimals.
std::string format_data_file(const ForwardData& data);
/// Throws ConfigError with the offending line number on malformed input.
ForwardData parse_data_file(const std::string& text);

}  // namespace twoscale
