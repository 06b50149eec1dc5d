#include "twoscale/catalogue.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twoscale {
namespace {

using F = Factor1d;
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

SeparableTerm term1(double scale, F fx, F fy) {
  SeparableTerm t;
  t.dim = 1;
  t.scale = scale;
  t.x_factors[0] = fx;
  t.y_factors[0] = fy;
  return t;
}

SeparableTerm term2(double scale, F fx0, F fx1, F fy0, F fy1) {
  SeparableTerm t;
  t.dim = 2;
  t.scale = scale;
  t.x_factors = {fx0, fx1};
  t.y_factors = {fy0, fy1};
  return t;
}

struct NamedFactor {
  const char* name;
  F factor;
  double scale;
};

// y-factors of the 2D uniform family: sin 2pi y, cos 2pi y, sin 4pi y / 4, cos 4pi y / 4.
const NamedFactor kUniform2dFactors[] = {
    {"s1", F::sin(1), 1.0}, {"c1", F::cos(1), 1.0}, {"s2q", F::sin(2), 0.25}, {"c2q", F::cos(2), 0.25}};

const NamedFactor kObs2dFactors[] = {{"s1", F::sin(1), 1.0}, {"c1", F::cos(1), 1.0}, {"s2", F::sin(2), 1.0},
                                     {"c2", F::cos(2), 1.0}, {"s3", F::sin(3), 1.0}, {"c3", F::cos(3), 1.0}};

const NamedFactor kLogObsFactors[] = {{"1", F::one(), 1.0},
                                      {"ps1", F::one_plus_sin(1), 1.0},
                                      {"pc1", F::one_plus_cos(1), 1.0},
                                      {"ps2", F::one_plus_sin(2), 1.0},
                                      {"pc2", F::one_plus_cos(2), 1.0}};

// Periodic eigenfunctions sin/cos(2 k pi t1) sin/cos(2 l pi t2), k, l in {0, 1},
// with the constant first. Eigenvalue of -Laplace is 4 pi^2 (k^2 + l^2).
struct Eigen2d {
  F f0, f1;
  double lambda;
};

std::vector<Eigen2d> eigen_functions() {
  const double e1 = 4.0 * kPi2;
  return {{F::one(), F::one(), 0.0},         {F::one(), F::sin(1), e1},        {F::one(), F::cos(1), e1},
          {F::sin(1), F::one(), e1},         {F::cos(1), F::one(), e1},        {F::sin(1), F::sin(1), 2 * e1},
          {F::sin(1), F::cos(1), 2 * e1},    {F::cos(1), F::sin(1), 2 * e1},   {F::cos(1), F::cos(1), 2 * e1}};
}

struct Catalogue {
  std::vector<TermEntry> terms;
  std::vector<FunctionalEntry> functionals;
  std::vector<GroupEntry> groups;
};

Catalogue build() {
  Catalogue c;
  auto add_term = [&](std::string id, int dim, SeparableTerm psi) { c.terms.push_back({std::move(id), dim, psi}); };
  auto add_fn = [&](std::string id, int dim, ObservationFunctional::Kind kind, int p, SeparableTerm w) {
    ObservationFunctional fn{id, kind, p, w};
    c.functionals.push_back({std::move(id), dim, std::move(fn)});
  };
  using K = ObservationFunctional::Kind;

  // 1D coefficient terms.
  add_term("const1", 1, term1(1.0, F::one(), F::one()));
  add_term("sin_y", 1, term1(1.0, F::one(), F::sin(1)));
  add_term("cos_y", 1, term1(1.0, F::one(), F::cos(1)));
  add_term("sin2_y", 1, term1(1.0, F::one(), F::sin(2)));
  add_term("cos2_y", 1, term1(1.0, F::one(), F::cos(2)));
  add_term("u1_sin", 1, term1(1.0, F::one_plus(), F::sin(1)));
  add_term("u1_cos", 1, term1(1.0, F::one_plus(), F::cos(1)));
  add_term("lam_y", 1, term1(1.0, F::one(), F::smooth_sign(0.1)));
  add_term("px1", 1, term1(1.0, F::one_plus(), F::one()));

  // 2D coefficient terms.
  add_term("const2", 2, term2(1.0, F::one(), F::one(), F::one(), F::one()));
  add_term("px2", 2, term2(1.0, F::one_plus(), F::one_plus(), F::one(), F::one()));
  add_term("lam_y1", 2, term2(1.0, F::one(), F::one(), F::smooth_sign(0.1), F::one()));
  add_term("lam_y2", 2, term2(1.0, F::one(), F::one(), F::one(), F::smooth_sign(0.1)));
  GroupEntry u2{"@u2", 2, {}};
  for (const auto& a : kUniform2dFactors)
    for (const auto& b : kUniform2dFactors) {
      std::string id = std::string("u2_") + a.name + "_" + b.name;
      add_term(id, 2, term2(0.25 * a.scale * b.scale, F::one_plus(), F::one_plus(), a.factor, b.factor));
      u2.members.push_back(id);
    }
  GroupEntry lg2{"@lg2", 2, {}};
  const auto eig = eigen_functions();
  for (std::size_t i = 0; i < eig.size(); ++i)
    for (std::size_t j = 0; j < eig.size(); ++j) {
      if (i == 0 && j == 0) continue;
      const double s = eig[i].lambda + eig[j].lambda;
      std::string id = "lg2_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
      add_term(id, 2, term2(1.0 / (s * s), eig[i].f0, eig[i].f1, eig[j].f0, eig[j].f1));
      lg2.members.push_back(id);
    }

  // 1D functionals.
  add_fn("one", 1, K::gradient, 0, term1(1.0, F::one(), F::one()));
  add_fn("x", 1, K::gradient, 0, term1(1.0, F::linear(), F::one()));
  add_fn("x2", 1, K::gradient, 0, term1(1.0, F::square(), F::one()));
  add_fn("xs1", 1, K::gradient, 0, term1(1.0, F::linear(), F::one_plus_sin(1)));
  add_fn("xc1", 1, K::gradient, 0, term1(1.0, F::linear(), F::one_plus_cos(1)));
  add_fn("flux", 1, K::flux, 0, term1(1.0, F::one(), F::one()));

  // 2D functionals.
  add_fn("flux2_p1", 2, K::flux, 0, term2(1.0, F::one(), F::one(), F::one(), F::one()));
  add_fn("flux2_p2", 2, K::flux, 1, term2(1.0, F::one(), F::one(), F::one(), F::one()));
  GroupEntry o2{"@o2", 2, {}};
  for (const auto& a : kObs2dFactors)
    for (const auto& b : kObs2dFactors)
      for (int p = 0; p < 2; ++p) {
        std::string id = std::string("o2_") + a.name + "_" + b.name + "_p" + std::to_string(p + 1);
        add_fn(id, 2, K::gradient, p, term2(1.0, F::one_plus(), F::one_plus(), a.factor, b.factor));
        o2.members.push_back(id);
      }
  GroupEntry olg{"@olg", 2, {}};
  for (const auto& f1 : kLogObsFactors)
    for (const auto& f2 : kLogObsFactors)
      for (const auto& g1 : kLogObsFactors)
        for (const auto& g2 : kLogObsFactors)
          for (int p = 0; p < 2; ++p) {
            std::string id = std::string("olg_") + f1.name + "_" + f2.name + "_" + g1.name + "_" + g2.name + "_p" +
                             std::to_string(p + 1);
            add_fn(id, 2, K::gradient, p, term2(1000.0, f1.factor, f2.factor, g1.factor, g2.factor));
            olg.members.push_back(id);
          }

  c.groups.push_back({"@u1", 1, {"u1_sin", "u1_cos"}});
  c.groups.push_back(std::move(u2));
  c.groups.push_back(std::move(lg2));
  c.groups.push_back({"@o1_u0", 1, {"x", "x2"}});
  c.groups.push_back({"@o1_u0u1", 1, {"xs1", "xc1"}});
  c.groups.push_back({"@o1_flux", 1, {"flux"}});
  c.groups.push_back(std::move(o2));
  c.groups.push_back(std::move(olg));
  return c;
}

const Catalogue& catalogue() {
  static const Catalogue c = build();
  return c;
}

const GroupEntry* find_group(const std::string& id) {
  for (const auto& g : catalogue().groups)
    if (g.id == id) return &g;
  return nullptr;
}

// Expands '@group' entries, keeping the order of appearance.
std::vector<std::string> expand(const std::vector<std::string>& ids, int dim) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (!id.empty() && id[0] == '@') {
      const GroupEntry* g = find_group(id);
      if (!g) throw ConfigError("unknown catalogue group '" + id + "'");
      if (g->dim != dim)
        throw ConfigError("catalogue group '" + id + "' has dimension " + std::to_string(g->dim) +
                          ", expected " + std::to_string(dim));
      out.insert(out.end(), g->members.begin(), g->members.end());
    } else {
      out.push_back(id);
    }
  }
  return out;
}

}  // namespace

bool ObservationFunctional::depends_on_y() const {
  for (int i = 0; i < weight.dim; ++i)
    if (weight.y_factors[i].kind != Factor1d::Kind::one) return true;
  return kind == Kind::flux;
}

const std::vector<TermEntry>& coefficient_term_catalogue() { return catalogue().terms; }
const std::vector<FunctionalEntry>& functional_catalogue() { return catalogue().functionals; }
const std::vector<GroupEntry>& group_catalogue() { return catalogue().groups; }

std::vector<ExpansionTerm> resolve_terms(const std::vector<std::string>& ids, int dim) {
  std::vector<ExpansionTerm> out;
  for (const auto& raw : expand(ids, dim)) {
    std::string id = raw;
    double scale = 1.0;
    if (auto colon = raw.find(':'); colon != std::string::npos) {
      id = raw.substr(0, colon);
      const std::string num = raw.substr(colon + 1);
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), scale);
      if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(scale))
        throw ConfigError("bad scale suffix in term '" + raw + "'");
    }
    const auto& terms = coefficient_term_catalogue();
    auto it = std::find_if(terms.begin(), terms.end(), [&](const TermEntry& e) { return e.id == id; });
    if (it == terms.end()) throw ConfigError("unknown coefficient term '" + id + "'");
    if (it->dim != dim)
      throw ConfigError("coefficient term '" + id + "' has dimension " + std::to_string(it->dim) + ", expected " +
                        std::to_string(dim));
    SeparableTerm psi = it->psi;
    psi.scale *= scale;
    out.push_back(ExpansionTerm::from(raw, psi));
  }
  return out;
}

std::vector<ObservationFunctional> resolve_functionals(const std::vector<std::string>& ids, int dim) {
  std::vector<ObservationFunctional> out;
  const auto& fns = functional_catalogue();
  for (const auto& id : expand(ids, dim)) {
    auto it = std::find_if(fns.begin(), fns.end(), [&](const FunctionalEntry& e) { return e.id == id; });
    if (it == fns.end()) throw ConfigError("unknown observation functional '" + id + "'");
    if (it->dim != dim)
      throw ConfigError("observation functional '" + id + "' has dimension " + std::to_string(it->dim) +
                        ", expected " + std::to_string(dim));
    out.push_back(it->functional);
  }
  return out;
}

std::string list_catalogue() {
  std::ostringstream os;
  os << "# coefficient terms (id, dim, psi)\n";
  for (const auto& e : coefficient_term_catalogue()) os << e.id << "\t" << e.dim << "\t" << e.psi.formula() << "\n";
  os << "# observation functionals (id, dim, kind, component, weight)\n";
  for (const auto& e : functional_catalogue()) {
    const auto& f = e.functional;
    os << e.id << "\t" << e.dim << "\t" << (f.kind == ObservationFunctional::Kind::flux ? "flux" : "gradient")
       << "\t" << f.component + 1 << "\t" << f.weight.formula() << "\n";
  }
  os << "# groups (id, dim, size, members)\n";
  for (const auto& g : group_catalogue()) {
    os << g.id << "\t" << g.dim << "\t" << g.members.size() << "\t";
    for (std::size_t i = 0; i < g.members.size(); ++i) os << (i ? "," : "") << g.members[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace twoscale
