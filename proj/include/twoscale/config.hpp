#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twoscale/cell_problem.hpp"
#include "twoscale/two_scale.hpp"
#include "twoscale/types.hpp"

namespace twoscale {

/// Line-oriented "key = value" file with [section] headers; '#' and ';'
/// start comments. Every error names the source and line.
class IniFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static IniFile parse(const std::string& text, const std::string& source = "config");

  const std::string& source() const { return source_; }
  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
  /// Throws ConfigError when missing.
  const Entry& at(const std::string& section, const std::string& key) const;
  const Entry* find(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;
  /// Keys of `section` not in `allowed`, as "source:line: ..." messages.
  std::vector<std::string> unknown_keys(const std::string& section, const std::vector<std::string>& allowed) const;

  std::string error_at(std::size_t line, const std::string& message) const;

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_lines_;
};

enum class ForwardKind { homogenized_1d, epsilon_1d, epsilon_fem, two_scale, cell };
const char* to_string(ForwardKind kind);

struct CoefficientConfig {
  PriorKind prior = PriorKind::uniform;
  std::vector<std::string> mean;    // term ids with optional ":scale"
  std::vector<std::string> offset;  // log-gaussian A*
  std::vector<std::string> terms;
  std::optional<double> kappa;
};

struct ForwardConfig {
  ForwardKind kind = ForwardKind::homogenized_1d;
  int level = 5;
  TensorMode mode = TensorMode::full;
  int cell_level = 6;
  std::size_t grid = 8;
  int macro_level = 5;
  double cg_tolerance = 1e-10;
  std::size_t y_points = 256;
  std::size_t x_panels = 64;
  double epsilon = 1.0 / 64;
  int resolution = 8;
};

struct DataConfig {
  std::vector<double> z_ref;  // given, or drawn from the prior with z_ref_seed
  std::vector<double> sigma_diagonal;  // size N, or one value broadcast to N
  std::optional<std::string> file;     // read delta and Sigma instead of synthesizing
  std::uint64_t noise_seed = 1;
  bool noise = true;
  std::optional<ForwardConfig> generator;  // defaults to the [forward] model
};

struct McmcConfig {
  std::size_t steps = 5000;
  double burn_in = 0.1;
  std::uint64_t seed = 1;
  std::size_t batch = 512;
};

struct OutputConfig {
  std::string directory;
  std::vector<Point> slices;  // 2D: x points for y-slices of the coefficient
  std::size_t field_points = 64;
};

enum class StudyKind { corrector, forward, fe_energy, hellinger_epsilon, hellinger_level };
const char* to_string(StudyKind kind);

struct StudyConfig {
  StudyKind kind = StudyKind::corrector;
  std::vector<double> epsilons;
  std::vector<int> levels;
  int reference_level = 9;
  std::size_t samples = 20000;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 1;
  std::vector<double> z;  // fixed parameter for corrector / forward / fe studies
  std::size_t panels_per_cell = 0;  // 0: one panel per Y-mesh cell
};

struct ExperimentConfig {
  std::string id;
  int dim = 1;
  double source = 1.0;
  CoefficientConfig coefficient;
  std::vector<std::string> observations;
  ForwardConfig forward;
  DataConfig data;
  McmcConfig mcmc;
  OutputConfig output;
  std::optional<StudyConfig> study;
  std::string text;  // verbatim source for the manifest
};

/// Parses and validates; catalogue ids are resolved, Sigma must be positive
/// and L >= 2. Throws ConfigError with "source:line:" prefixes.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace twoscale
