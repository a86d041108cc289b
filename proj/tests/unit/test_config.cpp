#include <doctest.h>

#include <set>

#include "helidiff/config.hpp"
#include "helidiff/errors.hpp"

using namespace helidiff;

namespace {

ScenarioConfig minimal() {
  ScenarioConfig c;
  c.name = "t";
  c.operator_name = "beltrami";
  return c;
}

}  // namespace

TEST_CASE("every built-in scenario validates and names one figure") {
  std::set<std::string> figures;
  for (const auto& name : builtin_scenarios()) {
    CAPTURE(name);
    const auto c = builtin_scenario(name);
    CHECK(c.name == name);
    CHECK_NOTHROW(validate(c));
    CHECK(figures.insert(c.figure).second);
  }
  CHECK(figures.size() == 11);
  CHECK_THROWS_AS(builtin_scenario("fig11"), ConfigError);
}

TEST_CASE("parse -> serialize -> parse is the identity") {
  for (const auto& name : builtin_scenarios()) {
    CAPTURE(name);
    const auto c = builtin_scenario(name);
    const auto back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(serialize_config(back) == serialize_config(c));
  }
  auto c = minimal();
  c.integrator.dt = 0.1;
  c.init.sigma = 1.0 / 3.0;
  c.friction.beta = 1e-300;
  c.domain.side = 6.0;
  c.noise.amplitude = {0.1, 0.2, 0.30000000000000004};
  c.operator_params = {{"x", -2.5e-17}};
  c.seed = (1ULL << 53) + 1;
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("only name and operator are required") {
  const auto c = parse_config("name = 't'\n[operator]\nname = 'beltrami'\n");
  CHECK(c == minimal());
  CHECK_THROWS_AS(parse_config("[operator]\nname = 'beltrami'\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("name = 't'\n"), ConfigError);
}

TEST_CASE("malformed configs raise ConfigError") {
  const std::string base = "name = 't'\n[operator]\nname = 'beltrami'\n";
  CHECK_THROWS_AS(parse_config(base + "[integrator]\ndtt = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("bogus = 1\n" + base), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "[integrator]\ndt = 'fast'\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "[integrator]\nsteps = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "[solver]\ngrid = [8, 8]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "[integrator\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.toml"), ConfigError);
  // Integral floats are accepted where integers are expected.
  CHECK(parse_config(base + "[integrator]\nsteps = 20.0\n").integrator.steps == 20);
}

TEST_CASE("validate rejects inconsistent settings") {
  auto bad = [](auto edit) {
    auto c = minimal();
    edit(c);
    return c;
  };
  CHECK_NOTHROW(validate(minimal()));
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.operator_name = "nope"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.integrator.dt = 0.0; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.integrator.scheme = "euler"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.trackers = {"energy"}; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.outputs = {"plots"}; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) {
                    c.solver.mode = "grid";
                    c.domain.kind = "unbounded";
                  })),
                  ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) {
                    c.init.kind = "gaussian";
                    c.init.center = {0.0, 0.0};
                  })),
                  ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.equilibrium.kind = "boltzmann"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.equilibrium.kind = "casimir_foliation"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.noise.map = "diagonal"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.operator_params = {{"gamma", 1.0}}; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.solver.beta_mode = "quadrature"; })), ConfigError);
}

TEST_CASE("overrides use TOML values and bare words") {
  auto c = builtin_scenario("fig10");
  c = apply_override(c, "integrator.steps = 40");
  c = apply_override(c, "operator.params.gamma=2.5");
  c = apply_override(c, "init.kind=flat");
  c = apply_override(c, "solver.grid = [8, 8, 8]");
  c = apply_override(c, "seed=7");
  CHECK(c.integrator.steps == 40);
  CHECK(c.operator_params.at("gamma") == 2.5);
  CHECK(c.init.kind == "flat");
  CHECK(c.solver.grid == std::array<int, 3>{8, 8, 8});
  CHECK(c.seed == 7);
  CHECK_THROWS_AS(apply_override(c, "integrator.dtt=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "nosection.dt=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "steps"), ConfigError);
}

TEST_CASE("scenario builders") {
  const auto c = builtin_scenario("fig6");
  const auto hl = scenario_histogram_layout(c);
  CHECK(hl.shape == std::array<int, 3>{16, 16, 1});
  CHECK(hl.side == doctest::Approx(2.0 * M_PI));
  CHECK(hl.center == Vec3{0.0, 0.0, 0.0});
  const auto gl = scenario_grid_layout(c);
  CHECK(gl.shape == std::array<int, 3>{64, 64, 1});
  CHECK(scenario_equilibrium(c).has_value());
  CHECK(scenario_dynamics(c).dim() == 3);

  const auto ll = builtin_scenario("fig10");
  CHECK(scenario_dynamics(ll).domain.kind == DomainSpec::Kind::unbounded);
  CHECK(scenario_trackers(ll).size() == 4);
  const auto tr = scenario_trackers(ll);
  const std::vector<double> x{1.0, 2.0, 3.0};
  CHECK(tr[0].fn(x) == 1.0);
  CHECK(tr[1].fn(x) == 4.0);
  CHECK(tr[2].fn(x) == 9.0);
  CHECK(tr[3].fn(x) == doctest::Approx(7.0));
  CHECK(scenario_beta_mode(ll) == BetaMode::fixed);
}
