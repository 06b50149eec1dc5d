// Command-line front end: experiments, rate studies and the cell/homogenized solvers.

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <optional>

#include "twoscale/catalogue.hpp"
#include "twoscale/cell_problem.hpp"
#include "twoscale/config.hpp"
#include "twoscale/csv.hpp"
#include "twoscale/experiment.hpp"
#include "twoscale/homogenized.hpp"

namespace ts = twoscale;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::filesystem::path output_dir(const ts::ExperimentConfig& c, const std::string& override_dir) {
  return ts::resolve_output_directory(override_dir.empty() ? c.output.directory : override_dir);
}

ts::ParameterVector parameter_or_ref(const ts::ExperimentConfig& c, const std::vector<double>& z) {
  const std::vector<double>& v = z.empty() ? c.data.z_ref : z;
  const std::size_t j = ts::build_coefficient(c).size();
  if (v.size() != j)
    throw ts::ConfigError("--z needs " + std::to_string(j) + " entries (the config has no z_ref to fall back on)");
  return ts::ParameterVector(v);
}

ts::CellSolutionSet solve_cells(const ts::ExperimentConfig& c, const ts::TwoScaleCoefficient& coeff,
                                const ts::ParameterVector& z) {
  ts::CellSolveOptions opt;
  opt.cg.relative_tolerance = std::min(c.forward.cg_tolerance, 1e-12);
  return ts::solve_cell_problems(coeff, z, ts::MacroGrid{c.dim, c.forward.grid}, c.forward.cell_level, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twoscale: two-scale homogenization and Bayesian inversion"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs,-j", jobs, "Upper bound on worker threads (default: OpenMP default)")
      ->check(CLI::PositiveNumber);

  std::string config_path, out_override;
  std::optional<std::size_t> steps, samples;
  std::optional<std::uint64_t> seed;
  std::vector<double> z, x;

  auto* run = app.add_subcommand("run", "Run a posterior experiment and write its output bundle");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--output,-o", out_override, "Output directory (relative paths go below the output root)");
  run->add_option("--steps", steps, "Override [mcmc] steps");
  run->add_option("--seed", seed, "Override [mcmc] seed");

  auto* rate = app.add_subcommand("rate-study", "Run the config's [study] block and write its CSV");
  rate->add_option("config", config_path)->required();
  rate->add_option("--output,-o", out_override);

  auto* hell = app.add_subcommand("hellinger", "Hellinger distance ladder (epsilon or level) of a [study] block");
  hell->add_option("config", config_path)->required();
  hell->add_option("--output,-o", out_override);
  hell->add_option("--samples", samples, "Override the number of shared prior draws");

  auto* hom = app.add_subcommand("homogenize", "Cell problems on the macro grid, A0 and the homogenized u0");
  hom->add_option("config", config_path)->required();
  hom->add_option("--output,-o", out_override);
  hom->add_option("--z", z, "Parameter vector (default: z_ref)");

  auto* cell = app.add_subcommand("cell", "Cell solutions w^l at the macro grid point nearest to --x");
  cell->add_option("config", config_path)->required();
  cell->add_option("--output,-o", out_override);
  cell->add_option("--z", z, "Parameter vector (default: z_ref)");
  cell->add_option("--x", x, "Macroscopic point (d entries)")->required();

  auto* list = app.add_subcommand("list-catalogue", "Print the coefficient-term and functional catalogue");

  std::vector<std::string> validate_paths;
  auto* validate = app.add_subcommand("validate-config", "Parse and validate config files");
  validate->add_option("configs", validate_paths)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (jobs > 0) omp_set_num_threads(jobs);

  try {
    if (*list) {
      std::cout << ts::list_catalogue();
      return 0;
    }
    if (*validate) {
      for (const auto& p : validate_paths) {
        const auto c = ts::load_experiment_config(p);
        std::cout << p << ": ok (" << c.id << ", d = " << c.dim << ", J = " << ts::build_coefficient(c).size()
                  << ", N = " << ts::build_observations(c).size() << ")\n";
      }
      return 0;
    }

    auto c = ts::load_experiment_config(config_path);
    const auto dir = output_dir(c, out_override);

    if (*run) {
      if (steps) c.mcmc.steps = *steps;
      if (seed) c.mcmc.seed = *seed;
      const auto r = ts::run_experiment(c, dir);
      std::cout << "wrote " << r.directory.string() << " (" << r.chain.size() << " samples, acceptance "
                << ts::format_double(r.chain.acceptance_rate) << ")\n";
      return 0;
    }
    if (*rate || *hell) {
      if (!c.study) throw ts::ConfigError(config_path + ": no [study] section");
      const bool is_hellinger =
          c.study->kind == ts::StudyKind::hellinger_epsilon || c.study->kind == ts::StudyKind::hellinger_level;
      if (*hell && !is_hellinger) throw ts::ConfigError(config_path + ": [study] kind is not a Hellinger ladder");
      if (samples) c.study->samples = *samples;
      std::cout << ts::run_study(c, dir);
      return 0;
    }

    const auto coeff = ts::build_coefficient(c);
    const auto zv = parameter_or_ref(c, z);
    const auto cells = solve_cells(c, coeff, zv);
    ts::BundleWriter bundle(dir);
    bundle.note("experiment", c.id);
    bundle.note("cell_level", std::to_string(c.forward.cell_level));
    if (*hom) {
      const auto a0 = ts::homogenized_tensor(coeff, zv, cells);
      const auto u0 = ts::solve_homogenized(a0, c.forward.macro_level, c.source);
      bundle.add("a0.csv", ts::homogenized_tensor_csv(a0));
      bundle.add("u0.csv", ts::macro_field_csv(u0));
      bundle.note("macro_level", std::to_string(c.forward.macro_level));
    } else {
      if (x.size() != static_cast<std::size_t>(c.dim)) throw ts::ConfigError("--x needs d entries");
      const auto& g = cells.grid();
      std::size_t k = 0;
      std::size_t stride = 1;
      for (int a = c.dim - 1; a >= 0; --a) {
        if (!(x[a] >= 0.0 && x[a] <= 1.0)) throw ts::ConfigError("--x must lie in [0, 1]^d");
        k += static_cast<std::size_t>(std::lround(x[a] * g.intervals)) * stride;
        stride *= g.points_per_axis();
      }
      const auto p = g.point(k);
      bundle.add("cell.csv", ts::cell_solution_csv(cells, k));
      bundle.note("x", ts::format_double(p[0]) + (c.dim == 2 ? " " + ts::format_double(p[1]) : ""));
    }
    bundle.finish();
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const ts::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ts::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ts::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
