#include "twoscale/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "twoscale/catalogue.hpp"
#include "twoscale/csv.hpp"

namespace twoscale {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// '#' starts a comment anywhere; ';' only at the start of a line, since it
// also separates slice points.
std::string strip_comment(const std::string& line) {
  const auto first = line.find_first_not_of(" \t");
  if (first != std::string::npos && line[first] == ';') return "";
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

// Typed access to one section with line-numbered errors.
class Reader {
 public:
  Reader(const IniFile& ini, std::string section) : ini_(ini), section_(std::move(section)) {}

  bool has(const std::string& key) const { return ini_.has(section_, key); }

  std::string fail_msg(const std::string& key, const std::string& what) const {
    const auto* e = ini_.find(section_, key);
    const std::string msg = "[" + section_ + "] " + key + ": " + what;
    return e ? ini_.error_at(e->line, msg) : ini_.source() + ": " + msg;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(fail_msg(key, what));
  }

  std::string text(const std::string& key) const { return trim(ini_.at(section_, key).value); }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const { return parse_number(key, text(key)); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key, long long lo, long long hi) const {
    const std::string t = text(key);
    long long v = 0;
    std::size_t used = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || t.empty()) fail(key, "expected an integer, got '" + t + "'");
    if (v < lo || v > hi) fail(key, "value " + t + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }
  long long integer(const std::string& key, long long lo, long long hi, long long fallback) const {
    return has(key) ? integer(key, lo, hi) : fallback;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string t = text(key);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) fail(key, "expected a non-negative integer");
    try {
      return std::stoull(t);
    } catch (const std::exception&) {
      fail(key, "seed out of range");
    }
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string t = text(key);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    fail(key, "expected true or false");
  }

  std::vector<std::string> list(const std::string& key) const { return split(text(key), ", \t"); }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : list(key)) out.push_back(parse_number(key, t));
    return out;
  }

  template <class E>
  E choice(const std::string& key, const std::vector<std::pair<std::string, E>>& options, E fallback) const {
    if (!has(key)) return fallback;
    const std::string t = text(key);
    for (const auto& [name, v] : options)
      if (name == t) return v;
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
    fail(key, "unknown value '" + t + "' (expected one of " + names + ")");
  }

  void check_keys(const std::vector<std::string>& allowed) const {
    const auto bad = ini_.unknown_keys(section_, allowed);
    if (!bad.empty()) throw ConfigError(bad.front());
  }

 private:
  // Decimal number or a fraction "a/b".
  double parse_number(const std::string& key, const std::string& t) const {
    try {
      if (auto slash = t.find('/'); slash != std::string::npos) {
        const double num = parse_double(trim(t.substr(0, slash)));
        const double den = parse_double(trim(t.substr(slash + 1)));
        if (den == 0.0) fail(key, "division by zero in '" + t + "'");
        return num / den;
      }
      return parse_double(t);
    } catch (const ConfigError& e) {
      if (std::string(e.what()).rfind(ini_.source(), 0) == 0) throw;
      fail(key, "expected a number, got '" + t + "'");
    }
  }

  const IniFile& ini_;
  std::string section_;
};

const std::vector<std::pair<std::string, ForwardKind>> kForwardKinds{{"homogenized_1d", ForwardKind::homogenized_1d},
                                                                     {"epsilon_1d", ForwardKind::epsilon_1d},
                                                                     {"epsilon_fem", ForwardKind::epsilon_fem},
                                                                     {"two_scale", ForwardKind::two_scale},
                                                                     {"cell", ForwardKind::cell}};

const std::vector<std::pair<std::string, StudyKind>> kStudyKinds{{"corrector", StudyKind::corrector},
                                                                 {"forward", StudyKind::forward},
                                                                 {"fe_energy", StudyKind::fe_energy},
                                                                 {"hellinger_epsilon", StudyKind::hellinger_epsilon},
                                                                 {"hellinger_level", StudyKind::hellinger_level}};

void read_forward_keys(const Reader& r, ForwardConfig& f) {
  f.kind = r.choice("model", kForwardKinds, f.kind);
  f.level = static_cast<int>(r.integer("level", 2, 12, f.level));
  f.mode = r.choice<TensorMode>("mode", {{"full", TensorMode::full}, {"sparse", TensorMode::sparse}}, f.mode);
  f.cell_level = static_cast<int>(r.integer("cell_level", 1, 14, f.cell_level));
  f.grid = static_cast<std::size_t>(r.integer("grid", 1, 4096, static_cast<long long>(f.grid)));
  f.macro_level = static_cast<int>(r.integer("macro_level", 2, 16, f.macro_level));
  f.cg_tolerance = r.number("cg_tolerance", f.cg_tolerance);
  if (!(f.cg_tolerance > 0.0 && f.cg_tolerance < 1.0)) r.fail("cg_tolerance", "must lie in (0, 1)");
  f.y_points = static_cast<std::size_t>(r.integer("y_points", 8, 1 << 16, static_cast<long long>(f.y_points)));
  f.x_panels = static_cast<std::size_t>(r.integer("x_panels", 1, 1 << 16, static_cast<long long>(f.x_panels)));
  f.epsilon = r.number("epsilon", f.epsilon);
  f.resolution = static_cast<int>(r.integer("resolution", 8, 4096, f.resolution));
  const double inv = 1.0 / f.epsilon;
  if (!(f.epsilon > 0.0 && f.epsilon <= 1.0) || std::abs(inv - std::round(inv)) > 1e-9 * inv)
    r.fail("epsilon", "1/epsilon must be a positive integer");
}

const std::vector<std::string> kForwardKeys{"model",  "level",        "mode",     "cell_level", "grid", "macro_level",
                                            "cg_tolerance", "y_points", "x_panels", "epsilon",    "resolution"};

}  // namespace

IniFile IniFile::parse(const std::string& text, const std::string& source) {
  IniFile ini;
  ini.source_ = source;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(ini.error_at(lineno, "unterminated section header"));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(ini.error_at(lineno, "empty section name"));
      if (ini.section_lines_.count(section)) throw ConfigError(ini.error_at(lineno, "duplicate section [" + section + "]"));
      ini.section_lines_[section] = lineno;
      ini.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(ini.error_at(lineno, "expected 'key = value'"));
    if (section.empty()) throw ConfigError(ini.error_at(lineno, "key outside of any [section]"));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(ini.error_at(lineno, "empty key"));
    auto& sec = ini.sections_[section];
    if (sec.count(key)) throw ConfigError(ini.error_at(lineno, "duplicate key '" + key + "' in [" + section + "]"));
    sec[key] = {trim(line.substr(eq + 1)), lineno};
  }
  return ini;
}

bool IniFile::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

const IniFile::Entry* IniFile::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

const IniFile::Entry& IniFile::at(const std::string& section, const std::string& key) const {
  if (const Entry* e = find(section, key)) return *e;
  throw ConfigError(source_ + ": missing key '" + key + "' in [" + section + "]");
}

std::vector<std::string> IniFile::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

std::vector<std::string> IniFile::unknown_keys(const std::string& section, const std::vector<std::string>& allowed) const {
  std::vector<std::string> out;
  auto s = sections_.find(section);
  if (s == sections_.end()) return out;
  std::vector<std::pair<std::size_t, std::string>> bad;
  for (const auto& [key, e] : s->second)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) bad.emplace_back(e.line, key);
  std::sort(bad.begin(), bad.end());
  for (const auto& [line, key] : bad) out.push_back(error_at(line, "unknown key '" + key + "' in [" + section + "]"));
  return out;
}

std::string IniFile::error_at(std::size_t line, const std::string& message) const {
  return source_ + ":" + std::to_string(line) + ": " + message;
}

const char* to_string(ForwardKind kind) {
  for (const auto& [name, k] : kForwardKinds)
    if (k == kind) return name.c_str();
  return "?";
}

const char* to_string(StudyKind kind) {
  for (const auto& [name, k] : kStudyKinds)
    if (k == kind) return name.c_str();
  return "?";
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  const IniFile ini = IniFile::parse(text, source);
  const std::vector<std::string> known{"experiment", "coefficient", "observation", "forward",
                                       "data",       "mcmc",        "output",      "study"};
  for (const auto& s : ini.sections())
    if (std::find(known.begin(), known.end(), s) == known.end())
      throw ConfigError(source + ": unknown section [" + s + "]");

  ExperimentConfig c;
  c.text = text;

  const Reader ex(ini, "experiment");
  ex.check_keys({"id", "dim", "source"});
  c.id = ex.text("id");
  if (c.id.empty() || c.id.find_first_of("/\\ \t") != std::string::npos)
    ex.fail("id", "must be a non-empty name without spaces or slashes");
  c.dim = static_cast<int>(ex.integer("dim", 1, 2));
  c.source = ex.number("source", 1.0);
  if (!std::isfinite(c.source)) ex.fail("source", "must be finite");

  const Reader co(ini, "coefficient");
  co.check_keys({"prior", "mean", "offset", "terms", "kappa"});
  c.coefficient.prior =
      co.choice<PriorKind>("prior", {{"uniform", PriorKind::uniform}, {"gaussian", PriorKind::gaussian}},
                           PriorKind::uniform);
  c.coefficient.mean = co.list("mean");
  c.coefficient.terms = co.list("terms");
  if (co.has("offset")) c.coefficient.offset = co.list("offset");
  if (co.has("kappa")) {
    c.coefficient.kappa = co.number("kappa");
    if (!(*c.coefficient.kappa > 0.0)) co.fail("kappa", "must be positive");
  }
  if (c.coefficient.prior == PriorKind::uniform && !c.coefficient.offset.empty())
    co.fail("offset", "only the gaussian prior takes an offset");
  std::size_t j = 0;
  try {
    resolve_terms(c.coefficient.mean, c.dim);
    resolve_terms(c.coefficient.offset, c.dim);
  } catch (const ConfigError& e) {
    co.fail("mean", e.what());
  }
  try {
    j = resolve_terms(c.coefficient.terms, c.dim).size();
  } catch (const ConfigError& e) {
    co.fail("terms", e.what());
  }
  if (j == 0) co.fail("terms", "at least one expansion term is required");

  const Reader ob(ini, "observation");
  ob.check_keys({"functionals"});
  c.observations = ob.list("functionals");
  std::size_t n = 0;
  try {
    n = resolve_functionals(c.observations, c.dim).size();
  } catch (const ConfigError& e) {
    ob.fail("functionals", e.what());
  }
  if (n == 0) ob.fail("functionals", "at least one functional is required");

  const Reader fw(ini, "forward");
  fw.check_keys(kForwardKeys);
  read_forward_keys(fw, c.forward);
  const bool one_d_only = c.forward.kind == ForwardKind::homogenized_1d || c.forward.kind == ForwardKind::epsilon_1d;
  if (c.dim == 2 && one_d_only) fw.fail("model", std::string(to_string(c.forward.kind)) + " needs dim = 1");

  const Reader da(ini, "data");
  std::vector<std::string> data_keys{"z_ref", "z_ref_seed", "sigma", "file", "noise_seed", "noise"};
  data_keys.insert(data_keys.end(), kForwardKeys.begin(), kForwardKeys.end());
  da.check_keys(data_keys);
  if (da.has("file")) c.data.file = da.text("file");
  if (da.has("z_ref") && da.has("z_ref_seed")) da.fail("z_ref_seed", "give either z_ref or z_ref_seed");
  if (da.has("z_ref")) {
    c.data.z_ref = da.numbers("z_ref");
    if (c.data.z_ref.size() != j)
      da.fail("z_ref", "has " + std::to_string(c.data.z_ref.size()) + " entries, the coefficient has " +
                           std::to_string(j) + " terms");
    if (c.coefficient.prior == PriorKind::uniform)
      for (double v : c.data.z_ref)
        if (!(v >= -1.0 && v <= 1.0)) da.fail("z_ref", "entries must lie in [-1, 1] for the uniform prior");
  } else if (da.has("z_ref_seed")) {
    c.data.z_ref = sample_prior(c.coefficient.prior, j, da.seed("z_ref_seed", 0)).vector();
  } else if (!c.data.file) {
    da.fail("z_ref", "one of z_ref, z_ref_seed or file is required");
  }
  if (!c.data.file) {
    c.data.sigma_diagonal = da.has("sigma") ? da.numbers("sigma") : std::vector<double>{1e-3};
    if (c.data.sigma_diagonal.size() != 1 && c.data.sigma_diagonal.size() != n)
      da.fail("sigma", "needs 1 or " + std::to_string(n) + " entries");
    for (double v : c.data.sigma_diagonal)
      if (!(v > 0.0 && std::isfinite(v))) da.fail("sigma", "variances must be positive (Sigma positive definite)");
  }
  c.data.noise_seed = da.seed("noise_seed", 1);
  c.data.noise = da.flag("noise", true);
  if (std::any_of(kForwardKeys.begin(), kForwardKeys.end(), [&](const std::string& k) { return da.has(k); })) {
    ForwardConfig g = c.forward;
    read_forward_keys(da, g);
    if (c.dim == 2 && (g.kind == ForwardKind::homogenized_1d || g.kind == ForwardKind::epsilon_1d))
      da.fail("model", std::string(to_string(g.kind)) + " needs dim = 1");
    c.data.generator = g;
  }

  const Reader mc(ini, "mcmc");
  mc.check_keys({"steps", "burn_in", "seed", "batch"});
  c.mcmc.steps = static_cast<std::size_t>(mc.integer("steps", 1, 100000000, 5000));
  c.mcmc.burn_in = mc.number("burn_in", 0.1);
  if (!(c.mcmc.burn_in >= 0.0 && c.mcmc.burn_in < 1.0)) mc.fail("burn_in", "must lie in [0, 1)");
  c.mcmc.seed = mc.seed("seed", 1);
  c.mcmc.batch = static_cast<std::size_t>(mc.integer("batch", 1, 1 << 20, 512));

  const Reader out(ini, "output");
  out.check_keys({"directory", "slices", "field_points"});
  c.output.directory = out.text("directory", c.id);
  c.output.field_points = static_cast<std::size_t>(out.integer("field_points", 2, 4096, 64));
  if (out.has("slices")) {
    for (const auto& pair : split(out.text("slices"), ";")) {
      const auto xy = split(pair, ", \t");
      if (xy.size() != 2) out.fail("slices", "expected 'x1 x2; x1 x2; ...'");
      Point p;
      try {
        p = make_point(parse_double(xy[0]), parse_double(xy[1]));
      } catch (const ConfigError&) {
        out.fail("slices", "expected numbers in '" + pair + "'");
      }
      if (!(p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0)) out.fail("slices", "points must lie in [0, 1]^2");
      c.output.slices.push_back(p);
    }
  }

  if (ini.has_section("study")) {
    const Reader st(ini, "study");
    st.check_keys({"kind", "epsilons", "levels", "reference_level", "samples", "bootstrap", "seed", "z",
                   "panels_per_cell"});
    StudyConfig s;
    s.kind = st.choice("kind", kStudyKinds, StudyKind::corrector);
    if (st.has("epsilons")) {
      s.epsilons = st.numbers("epsilons");
      for (double e : s.epsilons) {
        const double inv = 1.0 / e;
        if (!(e > 0.0 && e <= 1.0) || std::abs(inv - std::round(inv)) > 1e-9 * inv)
          st.fail("epsilons", "1/epsilon must be a positive integer");
      }
    }
    if (st.has("levels"))
      for (double l : st.numbers("levels")) {
        if (l != std::round(l) || l < 2 || l > 12) st.fail("levels", "levels must be integers in [2, 12]");
        s.levels.push_back(static_cast<int>(l));
      }
    s.reference_level = static_cast<int>(st.integer("reference_level", 2, 12, 9));
    s.samples = static_cast<std::size_t>(st.integer("samples", 10, 100000000, 20000));
    s.bootstrap = static_cast<std::size_t>(st.integer("bootstrap", 0, 100000, 200));
    s.seed = st.seed("seed", 1);
    s.panels_per_cell = static_cast<std::size_t>(st.integer("panels_per_cell", 0, 1 << 16, 0));
    s.z = st.has("z") ? st.numbers("z") : c.data.z_ref;
    if (s.z.size() != j) st.fail("z", "needs " + std::to_string(j) + " entries");
    const bool eps_ladder = s.kind == StudyKind::corrector || s.kind == StudyKind::forward ||
                            s.kind == StudyKind::hellinger_epsilon;
    if (eps_ladder && s.epsilons.size() < 3) st.fail("epsilons", "at least three values are required");
    if (!eps_ladder && s.levels.size() < 3) st.fail("levels", "at least three values are required");
    if (!eps_ladder)
      for (int l : s.levels)
        if (l >= s.reference_level) st.fail("levels", "every level must lie below reference_level");
    c.study = s;
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path);
}

}  // namespace twoscale
