#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "twoscale/config.hpp"
#include "twoscale/fine_scale.hpp"
#include "twoscale/forward_models.hpp"
#include "twoscale/mcmc.hpp"

namespace twoscale {

/// Environment variable naming the directory that relative output paths
/// are resolved against (default: ./output).
inline constexpr const char* kOutputRootVariable = "TWOSCALE_OUTPUT_ROOT";

std::filesystem::path output_root();
/// Absolute directories are kept; relative ones go below output_root().
std::filesystem::path resolve_output_directory(const std::string& directory);

TwoScaleCoefficient build_coefficient(const ExperimentConfig& config);
ObservationSpec build_observations(const ExperimentConfig& config);
std::shared_ptr<const ForwardModel> build_forward(const ExperimentConfig& config, const ForwardConfig& forward);
/// Reads the data file, or synthesizes delta = G(z_ref) + nu with the
/// generator model (the [forward] model unless [data] overrides it).
ForwardData build_data(const ExperimentConfig& config);

std::string sha256_hex(const std::string& bytes);
std::string version_string();

/// Writes files into `directory` and a manifest listing each with its
/// SHA-256, plus the given key = value lines.
class BundleWriter {
 public:
  explicit BundleWriter(std::filesystem::path directory);

  void add(const std::string& name, const std::string& content);
  void note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }
  /// Writes manifest.txt; returns its path.
  std::filesystem::path finish();
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;  // name, hash
  std::vector<std::pair<std::string, std::string>> notes_;
};

struct RunResult {
  ForwardData data;
  PosteriorChain chain;
  std::filesystem::path directory;
};

/// Full posterior experiment: data, chain, scatter, summary, coefficient
/// fields (reference and posterior mean) and manifest.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& directory);

/// Coefficient fields on a field_points^2 grid of (x, y) (d = 1) or on the
/// y-cell at each configured x-slice (d = 2): "x,y,a_ref,a_mean,a_var" or
/// "y1,y2,a_ref,a_mean,a_var".
std::vector<std::pair<std::string, std::string>> field_csvs(const ExperimentConfig& config,
                                                            const TwoScaleCoefficient& coeff,
                                                            const PosteriorChain& chain);

/// Rate studies. Every function returns the CSV it writes.
struct CorrectorStudy {
  std::vector<RateRow> rows;
  LogLogFit fit;
};
CorrectorStudy corrector_study(const ExperimentConfig& config);

struct ForwardStudy {
  std::vector<double> epsilons, errors;
  LogLogFit fit;
  bool monotone = false;
};
ForwardStudy forward_study(const ExperimentConfig& config);
std::string forward_study_csv(const ForwardStudy& study);

struct FeEnergyRow {
  int level = 0;
  std::size_t dofs_full = 0, dofs_sparse = 0;
  double error_full = 0.0, error_sparse = 0.0;
};
struct FeEnergyStudy {
  std::vector<FeEnergyRow> rows;
  LogLogFit fit_full;  // error against h = 2^-(L+1)
};
FeEnergyStudy fe_energy_study(const ExperimentConfig& config);
std::string fe_energy_csv(const FeEnergyStudy& study);

HellingerStudy hellinger_study(const ExperimentConfig& config);

/// Runs the [study] block and writes the CSV plus manifest into `directory`.
std::string run_study(const ExperimentConfig& config, const std::filesystem::path& directory);

}  // namespace twoscale
