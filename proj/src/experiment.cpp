#include "twoscale/experiment.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "twoscale/catalogue.hpp"
#include "twoscale/csv.hpp"
#include "twoscale/homogenized.hpp"

#ifndef TWOSCALE_VERSION
#define TWOSCALE_VERSION "0.0.0"
#endif

namespace twoscale {
namespace {

SeparableSum to_sum(const std::vector<std::string>& ids, int dim) {
  SeparableSum s;
  for (const auto& t : resolve_terms(ids, dim)) s.terms.push_back(t.psi);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join(std::span<const double> v, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + format_double(v[i]);
  return out;
}

std::vector<Point> uniform_points(std::size_t n, int dim) {
  std::vector<Point> out;
  if (dim == 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(make_point((i + 0.5) / static_cast<double>(n)));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out.push_back(make_point((i + 0.5) / static_cast<double>(n), (j + 0.5) / static_cast<double>(n)));
  }
  return out;
}

const StudyConfig& require_study(const ExperimentConfig& config, StudyKind kind) {
  if (!config.study) throw ConfigError(config.id + ": no [study] section");
  if (config.study->kind != kind)
    throw ConfigError(config.id + ": study kind is " + to_string(config.study->kind) + ", not " + to_string(kind));
  return *config.study;
}

std::shared_ptr<const ForwardModel> epsilon_model(const ExperimentConfig& config, double eps) {
  ForwardConfig f = config.forward;
  f.kind = config.dim == 1 ? ForwardKind::epsilon_1d : ForwardKind::epsilon_fem;
  f.epsilon = eps;
  return build_forward(config, f);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

std::filesystem::path output_root() {
  const char* env = std::getenv(kOutputRootVariable);
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("output");
}

std::filesystem::path resolve_output_directory(const std::string& directory) {
  const std::filesystem::path p(directory);
  return p.is_absolute() ? p : output_root() / p;
}

TwoScaleCoefficient build_coefficient(const ExperimentConfig& config) {
  const auto& c = config.coefficient;
  auto terms = resolve_terms(c.terms, config.dim);
  auto mean = to_sum(c.mean, config.dim);
  if (c.prior == PriorKind::uniform) return TwoScaleCoefficient::uniform(config.dim, mean, std::move(terms), c.kappa);
  return TwoScaleCoefficient::log_gaussian(config.dim, to_sum(c.offset, config.dim), mean, std::move(terms));
}

ObservationSpec build_observations(const ExperimentConfig& config) {
  return ObservationSpec::from_ids(config.observations, config.dim);
}

std::shared_ptr<const ForwardModel> build_forward(const ExperimentConfig& config, const ForwardConfig& f) {
  auto coeff = build_coefficient(config);
  auto spec = build_observations(config);
  switch (f.kind) {
    case ForwardKind::homogenized_1d:
      if (config.dim != 1) break;
      return std::make_shared<HomogenizedForward1d>(std::move(coeff), std::move(spec), config.source, f.y_points,
                                                    f.x_panels);
    case ForwardKind::epsilon_1d:
      if (config.dim != 1) break;
      return std::make_shared<EpsilonForward1d>(std::move(coeff), std::move(spec), f.epsilon, config.source);
    case ForwardKind::epsilon_fem:
      return std::make_shared<EpsilonForwardFem>(std::move(coeff), std::move(spec), f.epsilon,
                                                 static_cast<std::size_t>(f.resolution), config.source,
                                                 CgOptions{f.cg_tolerance, 100000});
    case ForwardKind::two_scale:
      return std::make_shared<TwoScaleFeForward>(std::move(coeff), std::move(spec), f.level, f.mode, config.source,
                                                 CgOptions{f.cg_tolerance, 20000});
    case ForwardKind::cell:
      return std::make_shared<CellHomogenizedForward>(std::move(coeff), std::move(spec), f.grid, f.cell_level,
                                                      f.macro_level, config.source, CgOptions{f.cg_tolerance, 200000});
  }
  throw ConfigError(config.id + ": forward model " + to_string(f.kind) + " needs dim = 1");
}

ForwardData build_data(const ExperimentConfig& config) {
  const std::size_t n = build_observations(config).size();
  if (config.data.file) {
    ForwardData d = parse_data_file(read_file(*config.data.file));
    if (d.size() != n)
      throw ConfigError(*config.data.file + ": has " + std::to_string(d.size()) + " observations, the experiment has " +
                        std::to_string(n));
    return d;
  }
  const auto model = build_forward(config, config.data.generator.value_or(config.forward));
  const ParameterVector z_ref(config.data.z_ref);
  const auto g0 = model->evaluate(z_ref);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    sigma(i, i) = config.data.sigma_diagonal.size() == 1 ? config.data.sigma_diagonal[0] : config.data.sigma_diagonal[i];
  if (config.data.noise) return synthesize_data(g0, sigma, config.data.noise_seed, z_ref);
  ForwardData d;
  d.delta = g0;
  d.sigma = sigma;
  d.z_ref = z_ref;
  return d;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string version_string() { return TWOSCALE_VERSION; }

BundleWriter::BundleWriter(std::filesystem::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError(dir_.string() + ": cannot create output directory (" + ec.message() + ")");
}

void BundleWriter::add(const std::string& name, const std::string& content) {
  std::ofstream out(dir_ / name, std::ios::binary);
  out << content;
  if (!out) throw ConfigError((dir_ / name).string() + ": write failed");
  files_.emplace_back(name, sha256_hex(content));
}

std::filesystem::path BundleWriter::finish() {
  std::ostringstream m;
  m << "# twoscale run manifest\n";
  m << "version = " << version_string() << '\n';
  for (const auto& [k, v] : notes_) m << k << " = " << v << '\n';
  for (const auto& [name, hash] : files_) m << "sha256 " << hash << "  " << name << '\n';
  const auto path = dir_ / "manifest.txt";
  std::ofstream out(path, std::ios::binary);
  out << m.str();
  if (!out) throw ConfigError(path.string() + ": write failed");
  return path;
}

std::vector<std::pair<std::string, std::string>> field_csvs(const ExperimentConfig& config,
                                                            const TwoScaleCoefficient& coeff,
                                                            const PosteriorChain& chain) {
  const std::size_t m = config.output.field_points;
  const std::optional<ParameterVector> z_ref =
      config.data.z_ref.empty() ? std::nullopt : std::optional<ParameterVector>(ParameterVector(config.data.z_ref));
  std::vector<std::pair<std::string, std::string>> out;
  const auto ref_value = [&](const Point& x, const Point& y) {
    return z_ref ? coeff.eval(*z_ref, x, y) : std::nan("");
  };
  if (config.dim == 1) {
    const auto xs = uniform_points(m, 1), ys = uniform_points(m, 1);
    const auto mom = posterior_field_moments(chain, coeff, xs, ys);
    CsvWriter csv({"x", "y", "a_ref", "a_mean", "a_var"});
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t q = 0; q < ys.size(); ++q) {
        const std::size_t k = i * ys.size() + q;
        csv.row({xs[i][0], ys[q][0], ref_value(xs[i], ys[q]), mom.mean[k], mom.variance[k]});
      }
    out.emplace_back("field.csv", csv.str());
    return out;
  }
  const auto ys = uniform_points(m, 2);
  for (std::size_t s = 0; s < config.output.slices.size(); ++s) {
    const Point x = config.output.slices[s];
    const auto mom = posterior_field_moments(chain, coeff, {x}, ys);
    CsvWriter csv({"y1", "y2", "a_ref", "a_mean", "a_var"});
    for (std::size_t q = 0; q < ys.size(); ++q)
      csv.row({ys[q][0], ys[q][1], ref_value(x, ys[q]), mom.mean[q], mom.variance[q]});
    out.emplace_back("field_slice_" + std::to_string(s + 1) + ".csv", csv.str());
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& directory) {
  const auto coeff = build_coefficient(config);
  ForwardData data = build_data(config);
  const auto forward = build_forward(config, config.forward);
  const PosteriorModel posterior(config.coefficient.prior, forward, data);

  SamplerOptions opt;
  opt.steps = config.mcmc.steps;
  opt.seed = config.mcmc.seed;
  opt.burn_in_fraction = config.mcmc.burn_in;
  opt.batch = config.mcmc.batch;
  PosteriorChain chain = run_independence_sampler(posterior, opt);

  std::string summary = "experiment = " + config.id + "\nforward = " + forward->name() + '\n' + chain_summary(chain);
  if (data.z_ref) {
    const auto mean = chain.mean();
    double err = 0.0;
    for (std::size_t j = 0; j < mean.size(); ++j) err = std::max(err, std::abs(mean[j] - (*data.z_ref)[j]));
    summary += "z_ref = " + join(data.z_ref->values()) + "\nmax_abs_mean_error = " + format_double(err) + '\n';
  }

  BundleWriter bundle(directory);
  bundle.add("config.ini", config.text);
  bundle.add("data.txt", format_data_file(data));
  bundle.add("chain.csv", chain_csv(chain));
  bundle.add("scatter.csv", scatter_csv(chain));
  bundle.add("summary.txt", summary);
  for (const auto& [name, csv] : field_csvs(config, coeff, chain)) bundle.add(name, csv);
  bundle.note("experiment", config.id);
  bundle.note("forward", forward->name());
  bundle.note("parameters_J", std::to_string(forward->parameters()));
  bundle.note("observations_N", std::to_string(forward->observations()));
  bundle.note("steps", std::to_string(config.mcmc.steps));
  bundle.note("mcmc_seed", std::to_string(config.mcmc.seed));
  if (data.noise_seed) bundle.note("noise_seed", std::to_string(*data.noise_seed));
  bundle.finish();
  return {std::move(data), std::move(chain), directory};
}

CorrectorStudy corrector_study(const ExperimentConfig& config) {
  const auto& s = require_study(config, StudyKind::corrector);
  const auto coeff = build_coefficient(config);
  const ParameterVector z(s.z);
  const auto& f = config.forward;
  CellSolveOptions copt;
  copt.cg.relative_tolerance = std::min(f.cg_tolerance, 1e-12);
  const auto cells = solve_cell_problems(coeff, z, MacroGrid{config.dim, f.grid}, f.cell_level, copt);
  const auto u0 = solve_homogenized(homogenized_tensor(coeff, z, cells), f.macro_level, config.source);
  const auto grad = corrector_gradient([&u0](const Point& x) { return u0.gradient(x); }, cells);

  CorrectorStudy out;
  std::vector<double> eps, err;
  for (double e : s.epsilons) {
    RateRow row;
    row.epsilon = e;
    row.two_scale_level = f.macro_level;
    EpsilonProblem p{&coeff, z, e, config.source, f.resolution};
    if (config.dim == 1) {
      const auto ref = solve_eps_1d_exact(p);
      const std::size_t panels = s.panels_per_cell ? s.panels_per_cell : cells.cells();
      row.error = corrector_error(ref, grad, panels);
      row.h_fine = e / static_cast<double>(panels);  // quadrature panel width; the reference is exact
    } else {
      const auto ref = solve_eps_fem(p, {f.cg_tolerance, 100000});
      row.error = corrector_error(ref, grad, e);
      row.h_fine = 1.0 / static_cast<double>(ref.n);
    }
    eps.push_back(e);
    err.push_back(row.error);
    out.rows.push_back(row);
  }
  out.fit = fit_loglog(eps, err);
  return out;
}

ForwardStudy forward_study(const ExperimentConfig& config) {
  const auto& s = require_study(config, StudyKind::forward);
  const ParameterVector z(s.z);
  const auto g0 = build_forward(config, config.forward)->evaluate(z);
  ForwardStudy out;
  for (double e : s.epsilons) {
    const auto ge = epsilon_model(config, e)->evaluate(z);
    double d2 = 0.0;
    for (std::size_t i = 0; i < g0.size(); ++i) d2 += (ge[i] - g0[i]) * (ge[i] - g0[i]);
    out.epsilons.push_back(e);
    out.errors.push_back(std::sqrt(d2));
  }
  out.fit = fit_loglog(out.epsilons, out.errors);
  out.monotone = strictly_decreasing(out.errors);
  return out;
}

std::string forward_study_csv(const ForwardStudy& study) {
  CsvWriter csv({"epsilon", "forward_error"});
  for (std::size_t i = 0; i < study.epsilons.size(); ++i) csv.row({study.epsilons[i], study.errors[i]});
  return csv.str() + "# slope " + format_double(study.fit.slope) + " stderr " + format_double(study.fit.stderr_slope) +
         '\n';
}

FeEnergyStudy fe_energy_study(const ExperimentConfig& config) {
  const auto& s = require_study(config, StudyKind::fe_energy);
  const auto coeff = build_coefficient(config);
  const ParameterVector z(s.z);
  TwoScaleSolveOptions opt;
  opt.source = config.source;
  opt.cg = {config.forward.cg_tolerance, 20000};

  const TwoScaleSpace ref_space(config.dim, s.reference_level, TensorMode::full);
  const auto ref = solve_two_scale(ref_space, coeff, z, opt);
  const TwoScaleOperator op(ref_space, coeff, z);

  FeEnergyStudy out;
  std::vector<double> h, e;
  for (int level : s.levels) {
    FeEnergyRow row;
    row.level = level;
    const auto dofs = count_dofs(config.dim, level);
    row.dofs_full = dofs.full();
    row.dofs_sparse = dofs.sparse();
    for (TensorMode mode : {TensorMode::full, TensorMode::sparse}) {
      const TwoScaleSpace space(config.dim, level, mode);
      const auto sol = solve_two_scale(space, coeff, z, opt);
      (mode == TensorMode::full ? row.error_full : row.error_sparse) = energy_difference(op, ref, space, sol);
    }
    h.push_back(mesh_width(level));
    e.push_back(row.error_full);
    out.rows.push_back(row);
  }
  out.fit_full = fit_loglog(h, e);
  return out;
}

std::string fe_energy_csv(const FeEnergyStudy& study) {
  CsvWriter csv({"level", "h", "dofs_full", "dofs_sparse", "error_full", "error_sparse"});
  for (const auto& r : study.rows)
    csv.row({double(r.level), mesh_width(r.level), double(r.dofs_full), double(r.dofs_sparse), r.error_full,
             r.error_sparse});
  return csv.str() + "# slope_full " + format_double(study.fit_full.slope) + " stderr " +
         format_double(study.fit_full.stderr_slope) + '\n';
}

HellingerStudy hellinger_study(const ExperimentConfig& config) {
  if (!config.study) throw ConfigError(config.id + ": no [study] section");
  const auto& s = *config.study;
  const bool eps = s.kind == StudyKind::hellinger_epsilon;
  if (!eps && s.kind != StudyKind::hellinger_level)
    throw ConfigError(config.id + ": study kind " + to_string(s.kind) + " is not a Hellinger study");
  const ForwardData data = build_data(config);
  const PriorKind prior = config.coefficient.prior;

  std::shared_ptr<const ForwardModel> reference;
  if (eps) {
    reference = build_forward(config, config.forward);
  } else {
    ForwardConfig f = config.forward;
    f.kind = ForwardKind::two_scale;
    f.level = s.reference_level;
    reference = build_forward(config, f);
  }
  const PosteriorModel ref_model(prior, reference, data);

  std::vector<std::unique_ptr<PosteriorModel>> models;
  std::vector<std::pair<double, const PosteriorModel*>> ladder;
  const std::size_t rungs = eps ? s.epsilons.size() : s.levels.size();
  for (std::size_t r = 0; r < rungs; ++r) {
    std::shared_ptr<const ForwardModel> fm;
    double param = 0.0;
    if (eps) {
      param = s.epsilons[r];
      fm = epsilon_model(config, param);
    } else {
      ForwardConfig f = config.forward;
      f.kind = ForwardKind::two_scale;
      f.level = s.levels[r];
      param = s.levels[r];
      fm = build_forward(config, f);
    }
    models.push_back(std::make_unique<PosteriorModel>(prior, fm, data));
    ladder.emplace_back(param, models.back().get());
  }
  return hellinger_rate_study(ref_model, ladder, eps ? LadderKind::epsilon : LadderKind::level, s.samples, s.seed,
                              s.bootstrap);
}

std::string run_study(const ExperimentConfig& config, const std::filesystem::path& directory) {
  if (!config.study) throw ConfigError(config.id + ": no [study] section");
  const auto& s = *config.study;
  std::string csv, name;
  switch (s.kind) {
    case StudyKind::corrector:
      csv = rate_study_csv(corrector_study(config).rows);
      name = "corrector_rate.csv";
      break;
    case StudyKind::forward:
      csv = forward_study_csv(forward_study(config));
      name = "forward_rate.csv";
      break;
    case StudyKind::fe_energy:
      csv = fe_energy_csv(fe_energy_study(config));
      name = "fe_energy.csv";
      break;
    case StudyKind::hellinger_epsilon:
      csv = hellinger_study_csv(hellinger_study(config), LadderKind::epsilon);
      name = "hellinger_epsilon.csv";
      break;
    case StudyKind::hellinger_level:
      csv = hellinger_study_csv(hellinger_study(config), LadderKind::level);
      name = "hellinger_level.csv";
      break;
  }
  BundleWriter bundle(directory);
  bundle.add("config.ini", config.text);
  bundle.add(name, csv);
  bundle.note("experiment", config.id);
  bundle.note("study", to_string(s.kind));
  bundle.note("z", join(s.z));
  if (s.kind == StudyKind::hellinger_epsilon || s.kind == StudyKind::hellinger_level) {
    bundle.note("samples", std::to_string(s.samples));
    bundle.note("seed", std::to_string(s.seed));
  }
  bundle.finish();
  return csv;
}

}  // namespace twoscale
