#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "twoscale/catalogue.hpp"
#include "twoscale/config.hpp"
#include "twoscale/experiment.hpp"

using namespace twoscale;

namespace {

const char* kBase = R"([experiment]
id = tiny
dim = 1

[coefficient]
prior = uniform
mean = const1:9
terms = @u1

[observation]
functionals = xs1, xc1

[forward]
model = homogenized_1d
y_points = 64
x_panels = 16

[data]
z_ref = 0.5, -0.45
sigma = 1e-4
noise_seed = 7

[mcmc]
steps = 400
seed = 3
)";

std::string message_of(const std::string& text) {
  try {
    parse_experiment_config(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parses defaults and catalogue ids") {
  const auto c = parse_experiment_config(kBase);
  CHECK(c.id == "tiny");
  CHECK(c.coefficient.terms == std::vector<std::string>{"@u1"});
  CHECK(c.observations.size() == 2);
  CHECK(c.forward.y_points == 64);
  CHECK(c.data.sigma_diagonal == std::vector<double>{1e-4});
  CHECK(c.mcmc.burn_in == doctest::Approx(0.1));
  CHECK(c.output.directory == "tiny");
  CHECK_FALSE(c.study);
  CHECK(build_coefficient(c).size() == 2);
}

TEST_CASE("config errors carry the line number") {
  CHECK(message_of(replace(kBase, "dim = 1", "dim = 3")).rfind("t.ini:3:", 0) == 0);
  CHECK(message_of(replace(kBase, "terms = @u1", "terms = nope")).rfind("t.ini:8:", 0) == 0);
  CHECK(message_of(replace(kBase, "steps = 400", "stepz = 400")).find("t.ini:24: unknown key 'stepz'") !=
        std::string::npos);
  CHECK(message_of(replace(kBase, "sigma = 1e-4", "sigma = -1")).rfind("t.ini:20:", 0) == 0);
  CHECK(message_of(replace(kBase, "z_ref = 0.5, -0.45", "z_ref = 0.5")).find("2 terms") != std::string::npos);
  CHECK(message_of(replace(kBase, "z_ref = 0.5, -0.45", "z_ref = 1.5, 0")).find("[-1, 1]") != std::string::npos);
  CHECK(message_of(std::string(kBase) + "[extra]\n").find("unknown section") != std::string::npos);
  CHECK(message_of(std::string(kBase) + "oops\n").find("t.ini:26: expected 'key = value'") != std::string::npos);
  CHECK(message_of(replace(kBase, "dim = 1", "dim = 1\ndim = 1")).find("duplicate key") != std::string::npos);
}

TEST_CASE("config reads fractions and studies") {
  const auto c = parse_experiment_config(std::string(kBase) +
                                         "[study]\nkind = forward\nepsilons = 1/8, 1/16, 1/32\n");
  REQUIRE(c.study);
  CHECK(c.study->epsilons[1] == 1.0 / 16);
  CHECK(c.study->z == c.data.z_ref);
  CHECK(message_of(std::string(kBase) + "[study]\nkind = forward\nepsilons = 1/8, 1/16, 0.3\n").find("positive integer") !=
        std::string::npos);
  CHECK(message_of(std::string(kBase) + "[study]\nkind = fe_energy\nlevels = 3 4 9\nreference_level = 9\n")
            .find("below reference_level") != std::string::npos);
}

TEST_CASE("a 2D config rejects 1D-only models") {
  std::string t = replace(kBase, "dim = 1", "dim = 2");
  t = replace(t, "mean = const1:9", "mean = const2:10");
  t = replace(t, "terms = @u1", "terms = @u2");
  t = replace(t, "functionals = xs1, xc1", "functionals = @o2");
  CHECK(message_of(t).find("needs dim = 1") != std::string::npos);
}

TEST_CASE("sha256 matches the standard test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run bundle is reproducible and hashed") {
  const auto root = std::filesystem::temp_directory_path() / "twoscale_unit_bundle";
  std::filesystem::remove_all(root);
  auto c = parse_experiment_config(kBase);
  c.output.field_points = 8;
  const auto a = run_experiment(c, root / "a");
  const auto b = run_experiment(c, root / "b");
  CHECK(a.chain.size() == 400);
  CHECK(a.data.noise_seed == std::optional<std::uint64_t>(7));
  for (const char* f : {"chain.csv", "scatter.csv", "summary.txt", "data.txt", "field.csv", "config.ini"}) {
    CAPTURE(f);
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
    CHECK(slurp(root / "a" / "manifest.txt").find(sha256_hex(slurp(root / "a" / f)) + "  " + f) !=
          std::string::npos);
  }
  CHECK(slurp(root / "a" / "manifest.txt") == slurp(root / "b" / "manifest.txt"));

  // The data file feeds back in and reproduces the chain.
  auto c2 = c;
  c2.data.file = (root / "a" / "data.txt").string();
  const auto d = run_experiment(c2, root / "d");
  CHECK(d.chain.samples == a.chain.samples);
  std::filesystem::remove_all(root);
}

TEST_CASE("relative output directories go below the output root") {
  ::setenv(kOutputRootVariable, "/tmp/ts_root", 1);
  CHECK(resolve_output_directory("x") == std::filesystem::path("/tmp/ts_root/x"));
  CHECK(resolve_output_directory("/abs") == std::filesystem::path("/abs"));
  ::unsetenv(kOutputRootVariable);
  CHECK(resolve_output_directory("x") == std::filesystem::path("output/x"));
}

TEST_CASE("forward study shrinks with epsilon in 1D") {
  const auto c = parse_experiment_config(std::string(kBase) +
                                         "[study]\nkind = forward\nepsilons = 1/4, 1/8, 1/16\n");
  const auto s = forward_study(c);
  CHECK(s.monotone);
  CHECK(s.fit.slope > 0.5);
}

TEST_CASE("z_ref_seed draws a reproducible reference parameter") {
  const auto t = replace(kBase, "z_ref = 0.5, -0.45", "z_ref_seed = 5");
  const auto a = parse_experiment_config(t);
  const auto b = parse_experiment_config(t);
  REQUIRE(a.data.z_ref.size() == 2);
  CHECK(a.data.z_ref == b.data.z_ref);
  for (double v : a.data.z_ref) CHECK(std::abs(v) <= 1.0);
  CHECK(a.data.z_ref != parse_experiment_config(replace(kBase, "z_ref = 0.5, -0.45", "z_ref_seed = 6")).data.z_ref);
  CHECK(message_of(replace(kBase, "z_ref = 0.5, -0.45", "z_ref = 0.5, -0.45\nz_ref_seed = 5")).find("either") !=
        std::string::npos);
}

TEST_CASE("every catalogue id round-trips through a config") {
  for (const auto& e : coefficient_term_catalogue()) {
    CAPTURE(e.id);
    std::string t = replace(kBase, "dim = 1", "dim = " + std::to_string(e.dim));
    t = replace(t, "mean = const1:9", "mean = const" + std::to_string(e.dim) + ":50");
    t = replace(t, "terms = @u1", "terms = " + e.id);
    t = replace(t, "functionals = xs1, xc1", e.dim == 1 ? "functionals = x" : "functionals = @o2");
    t = replace(t, "model = homogenized_1d", e.dim == 1 ? "model = homogenized_1d" : "model = cell");
    t = replace(t, "z_ref = 0.5, -0.45", "z_ref = 0.5");
    const auto c = parse_experiment_config(t);
    CHECK(c.coefficient.terms == std::vector<std::string>{e.id});
    CHECK(build_coefficient(c).size() == 1);
  }
  for (const auto& e : functional_catalogue()) {
    CAPTURE(e.id);
    const auto f = resolve_functionals({e.id}, e.dim);
    REQUIRE(f.size() == 1);
    CHECK(f[0].id == e.id);
  }
  for (const auto& g : group_catalogue()) {
    CAPTURE(g.id);
    const bool is_term = !coefficient_term_catalogue().empty() &&
                         std::any_of(coefficient_term_catalogue().begin(), coefficient_term_catalogue().end(),
                                     [&](const TermEntry& e) { return e.id == g.members.front(); });
    CHECK((is_term ? resolve_terms({g.id}, g.dim).size() : resolve_functionals({g.id}, g.dim).size()) ==
          g.members.size());
  }
}

TEST_CASE("semicolons separate slice points and start whole-line comments") {
  std::string t = replace(kBase, "dim = 1", "dim = 2");
  t = replace(t, "mean = const1:9", "mean = const2:10");
  t = replace(t, "terms = @u1", "terms = @u2");
  t = replace(t, "functionals = xs1, xc1", "functionals = @o2");
  t = replace(t, "model = homogenized_1d\ny_points = 64\nx_panels = 16", "model = cell");
  t = replace(t, "z_ref = 0.5, -0.45", "z_ref_seed = 1");
  t += "; a comment\n[output]\nslices = 0.25 0.25; 0.25 0.75  # two points\n";
  const auto c = parse_experiment_config(t);
  REQUIRE(c.output.slices.size() == 2);
  CHECK(c.output.slices[1][1] == 0.75);
}
