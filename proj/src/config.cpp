#include "helidiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_FLOAT_CHARCONV 1
#include <toml.hpp>

#include "helidiff/diagnostics.hpp"
#include "helidiff/errors.hpp"

namespace helidiff {
namespace {

constexpr double kTwoPi = 6.283185307179586;

const std::set<std::string> kOutputs{"histogram", "slice", "snapshots", "trackers", "entropy",
                                     "comparison", "grid",  "orbit",     "moments"};
const std::set<std::string> kTrackers{"casimir", "energy", "x2", "y2", "z2", "radius"};

// Reads the keys of one table and rejects the ones nobody asked for.
class Section {
 public:
  Section(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    read(*n, out, where(key));
  }

  Section sub(const char* key) {
    seen_.insert(key);
    const toml::table* s = nullptr;
    if (t_) {
      if (const toml::node* n = t_->get(key)) {
        s = n->as_table();
        if (!s) throw ConfigError(where(key) + " must be a table");
      }
    }
    return {s, path_.empty() ? key : path_ + "." + key};
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      if (!seen_.count(std::string(k.str()))) {
        std::string known;
        for (const auto& s : seen_) known += (known.empty() ? "" : ", ") + s;
        throw ConfigError("unknown key " + where(std::string(k.str())) + " (valid: " + known + ")");
      }
    }
  }

 private:
  std::string where(const std::string& key) const { return "'" + (path_.empty() ? key : path_ + "." + key) + "'"; }

  static double number(const toml::node& n, const std::string& w) {
    if (auto d = n.as_floating_point()) return d->get();
    if (auto i = n.as_integer()) return static_cast<double>(i->get());
    throw ConfigError(w + " must be a number");
  }
  static std::int64_t integer(const toml::node& n, const std::string& w) {
    if (auto i = n.as_integer()) return i->get();
    if (auto d = n.as_floating_point()) {
      if (std::floor(d->get()) == d->get() && std::abs(d->get()) < 9e15) return static_cast<std::int64_t>(d->get());
    }
    throw ConfigError(w + " must be an integer");
  }
  static const toml::array& array(const toml::node& n, const std::string& w) {
    if (auto a = n.as_array()) return *a;
    throw ConfigError(w + " must be an array");
  }

  static void read(const toml::node& n, double& out, const std::string& w) { out = number(n, w); }
  static void read(const toml::node& n, bool& out, const std::string& w) {
    if (auto b = n.as_boolean()) {
      out = b->get();
      return;
    }
    throw ConfigError(w + " must be true or false");
  }
  static void read(const toml::node& n, std::string& out, const std::string& w) {
    if (auto s = n.as_string()) {
      out = s->get();
      return;
    }
    throw ConfigError(w + " must be a string");
  }
  static void read(const toml::node& n, std::uint32_t& out, const std::string& w) {
    const auto v = integer(n, w);
    if (v < 0 || v > 0xffffffffLL) throw ConfigError(w + " is out of range");
    out = static_cast<std::uint32_t>(v);
  }
  static void read(const toml::node& n, std::uint64_t& out, const std::string& w) {
    const auto v = integer(n, w);
    if (v < 0) throw ConfigError(w + " must be non-negative");
    out = static_cast<std::uint64_t>(v);
  }
  static void read(const toml::node& n, std::vector<double>& out, const std::string& w) {
    out.clear();
    for (const auto& e : array(n, w)) out.push_back(number(e, w));
  }
  static void read(const toml::node& n, std::vector<std::string>& out, const std::string& w) {
    out.clear();
    for (const auto& e : array(n, w)) {
      std::string s;
      read(e, s, w);
      out.push_back(s);
    }
  }
  static void read(const toml::node& n, std::array<int, 3>& out, const std::string& w) {
    const auto& a = array(n, w);
    if (a.size() != 3) throw ConfigError(w + " must have three entries");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto v = integer(*a.get(i), w);
      if (v < 1 || v > 4096) throw ConfigError(w + " entries must be in [1, 4096]");
      out[i] = static_cast<int>(v);
    }
  }
  static void read(const toml::node& n, ParamMap& out, const std::string& w) {
    const auto* t = n.as_table();
    if (!t) throw ConfigError(w + " must be a table of numbers");
    out.clear();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = number(v, w + "." + std::string(k.str()));
  }

  const toml::table* t_;
  std::string path_;
  std::set<std::string> seen_;
};

toml::array to_array(const std::vector<double>& v) {
  toml::array a;
  for (double x : v) a.push_back(x);
  return a;
}

toml::array to_array(const std::vector<std::string>& v) {
  toml::array a;
  for (const auto& x : v) a.push_back(x);
  return a;
}

toml::array to_array(const std::array<int, 3>& v) {
  toml::array a;
  for (int x : v) a.push_back(x);
  return a;
}

toml::table to_table(const ParamMap& p) {
  toml::table t;
  for (const auto& [k, v] : p) t.insert(k, v);
  return t;
}

ScenarioConfig from_table(const toml::table& root) {
  ScenarioConfig c;
  Section top(&root, "");
  top.get("name", c.name);
  top.get("figure", c.figure);
  top.get("seed", c.seed);
  top.get("reference", c.reference);
  top.get("trackers", c.trackers);
  top.get("orbit_particles", c.orbit_particles);
  top.get("entropy", c.entropy);
  top.get("outputs", c.outputs);

  auto op = top.sub("operator");
  op.get("name", c.operator_name);
  op.get("params", c.operator_params);
  op.finish();

  auto ham = top.sub("hamiltonian");
  ham.get("name", c.hamiltonian);
  ham.get("params", c.hamiltonian_params);
  ham.finish();

  auto noise = top.sub("noise");
  noise.get("amplitude", c.noise.amplitude);
  noise.get("map", c.noise.map);
  noise.get("scales", c.noise.scales);
  noise.finish();

  auto fr = top.sub("friction");
  fr.get("enabled", c.friction.enabled);
  fr.get("beta", c.friction.beta);
  fr.get("adaptive", c.friction.adaptive);
  fr.finish();

  auto dom = top.sub("domain");
  dom.get("kind", c.domain.kind);
  dom.get("center", c.domain.center);
  dom.get("side", c.domain.side);
  dom.finish();

  auto init = top.sub("init");
  init.get("kind", c.init.kind);
  init.get("center", c.init.center);
  init.get("sigma", c.init.sigma);
  init.get("side", c.init.side);
  init.finish();

  auto integ = top.sub("integrator");
  integ.get("dt", c.integrator.dt);
  integ.get("steps", c.integrator.steps);
  integ.get("snapshot_every", c.integrator.snapshot_every);
  integ.get("tracker_every", c.integrator.tracker_every);
  integ.get("scheme", c.integrator.scheme);
  integ.finish();

  auto sol = top.sub("solver");
  sol.get("mode", c.solver.mode);
  sol.get("particles", c.solver.particles);
  sol.get("grid", c.solver.grid);
  sol.get("grid_init", c.solver.grid_init);
  sol.get("beta_mode", c.solver.beta_mode);
  sol.get("grid_t_end", c.solver.grid_t_end);
  sol.get("grid_snapshots", c.solver.grid_snapshots);
  sol.get("entropy_samples", c.solver.entropy_samples);
  sol.finish();

  auto hist = top.sub("histogram");
  hist.get("shape", c.histogram.shape);
  hist.get("center", c.histogram.center);
  hist.get("side", c.histogram.side);
  hist.finish();

  auto eq = top.sub("equilibrium");
  eq.get("kind", c.equilibrium.kind);
  eq.get("profile", c.equilibrium.profile);
  eq.get("gamma", c.equilibrium.gamma);
  eq.get("beta", c.equilibrium.beta);
  eq.finish();

  top.finish();
  if (c.name.empty()) throw ConfigError("'name' is required");
  if (c.operator_name.empty()) throw ConfigError("'operator.name' is required");
  return c;
}

toml::table to_table(const ScenarioConfig& c) {
  toml::table t;
  t.insert("name", c.name);
  t.insert("figure", c.figure);
  t.insert("seed", static_cast<std::int64_t>(c.seed));
  t.insert("reference", c.reference);
  t.insert("trackers", to_array(c.trackers));
  t.insert("orbit_particles", static_cast<std::int64_t>(c.orbit_particles));
  t.insert("entropy", c.entropy);
  t.insert("outputs", to_array(c.outputs));
  t.insert("operator", toml::table{{"name", c.operator_name}, {"params", to_table(c.operator_params)}});
  t.insert("hamiltonian", toml::table{{"name", c.hamiltonian}, {"params", to_table(c.hamiltonian_params)}});
  t.insert("noise", toml::table{{"amplitude", to_array(c.noise.amplitude)},
                                {"map", c.noise.map},
                                {"scales", to_array(c.noise.scales)}});
  t.insert("friction",
           toml::table{{"enabled", c.friction.enabled}, {"beta", c.friction.beta}, {"adaptive", c.friction.adaptive}});
  t.insert("domain",
           toml::table{{"kind", c.domain.kind}, {"center", to_array(c.domain.center)}, {"side", c.domain.side}});
  t.insert("init", toml::table{{"kind", c.init.kind},
                               {"center", to_array(c.init.center)},
                               {"sigma", c.init.sigma},
                               {"side", c.init.side}});
  t.insert("integrator", toml::table{{"dt", c.integrator.dt},
                                     {"steps", static_cast<std::int64_t>(c.integrator.steps)},
                                     {"snapshot_every", static_cast<std::int64_t>(c.integrator.snapshot_every)},
                                     {"tracker_every", static_cast<std::int64_t>(c.integrator.tracker_every)},
                                     {"scheme", c.integrator.scheme}});
  t.insert("solver", toml::table{{"mode", c.solver.mode},
                                 {"particles", static_cast<std::int64_t>(c.solver.particles)},
                                 {"grid", to_array(c.solver.grid)},
                                 {"grid_init", c.solver.grid_init},
                                 {"beta_mode", c.solver.beta_mode},
                                 {"grid_t_end", c.solver.grid_t_end},
                                 {"grid_snapshots", static_cast<std::int64_t>(c.solver.grid_snapshots)},
                                 {"entropy_samples", static_cast<std::int64_t>(c.solver.entropy_samples)}});
  t.insert("histogram", toml::table{{"shape", to_array(c.histogram.shape)},
                                    {"center", to_array(c.histogram.center)},
                                    {"side", c.histogram.side}});
  t.insert("equilibrium", toml::table{{"kind", c.equilibrium.kind},
                                      {"profile", c.equilibrium.profile},
                                      {"gamma", c.equilibrium.gamma},
                                      {"beta", c.equilibrium.beta}});
  return t;
}

toml::table parse_table(const std::string& text, const std::string& origin) {
  try {
    return toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "cannot parse " << origin << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
}

void check_choice(const std::string& value, std::initializer_list<const char*> valid, const char* what) {
  std::string list;
  for (const char* v : valid) {
    if (value == v) return;
    list += (list.empty() ? "" : ", ") + std::string(v);
  }
  throw ConfigError(std::string(what) + " '" + value + "' is not one of: " + list);
}

// Desk-scale ensemble scenario on the 2 pi periodic box.
ScenarioConfig ensemble_scenario(const char* name, const char* figure, const char* op) {
  ScenarioConfig c;
  c.name = name;
  c.figure = figure;
  c.operator_name = op;
  c.integrator.snapshot_every = 100;
  c.outputs = {"histogram", "slice", "snapshots", "entropy", "comparison"};
  return c;
}

// Single-orbit scenario on an unbounded domain.
ScenarioConfig orbit_scenario(const char* name, const char* figure, const char* op, double amplitude) {
  ScenarioConfig c;
  c.name = name;
  c.figure = figure;
  c.operator_name = op;
  c.hamiltonian = "rigid_body";
  c.hamiltonian_params = {{"Ix", 1.0}, {"Iy", 2.0}, {"Iz", 3.0}};
  c.noise.amplitude = {amplitude};
  c.domain.kind = "unbounded";
  c.init.kind = "point";
  c.init.center = {1.0, 0.3, 0.5};
  c.integrator.dt = 1e-3;
  c.integrator.steps = 20000;
  c.integrator.snapshot_every = 20;
  c.integrator.tracker_every = 100;
  c.solver.particles = 1;
  c.orbit_particles = 1;
  c.trackers = {"energy"};
  c.outputs = {"orbit", "trackers"};
  return c;
}

}  // namespace

const std::vector<std::string>& builtin_scenarios() {
  static const std::vector<std::string> names{"fig2a", "fig2b", "fig3a", "fig3b", "fig4", "fig5",
                                              "fig6",  "fig7",  "fig8",  "fig9",  "fig10"};
  return names;
}

ScenarioConfig builtin_scenario(const std::string& name) {
  if (name == "fig2a" || name == "fig2b") {
    const bool noisy = name == "fig2b";
    auto c = orbit_scenario(name.c_str(), noisy ? "2(b)" : "2(a)", "euler_rigid_body", noisy ? 1.0 : 0.0);
    c.integrator.scheme = "midpoint";
    c.trackers = {"casimir", "energy"};
    if (noisy) {
      c.solver.particles = 128;
      c.integrator.steps = 200000;
      c.integrator.snapshot_every = 200;
      c.integrator.tracker_every = 1000;
    }
    return c;
  }
  if (name == "fig3a" || name == "fig3b") {
    const bool noisy = name == "fig3b";
    return orbit_scenario(name.c_str(), noisy ? "3(b)" : "3(a)", "spiral", noisy ? 1.0 : 0.0);
  }
  if (name == "fig4") {
    auto c = ensemble_scenario("fig4", "4", "uniform_z");
    c.equilibrium.kind = "flat";
    return c;
  }
  if (name == "fig5") {
    auto c = ensemble_scenario("fig5", "5(b)", "grad_casimir");
    c.equilibrium.kind = "flat";
    return c;
  }
  if (name == "fig6") {
    auto c = ensemble_scenario("fig6", "6(c)", "lambda_grad_casimir");
    c.equilibrium.kind = "casimir_foliation";
    c.equilibrium.profile = "zero";
    c.entropy = "sigma_lambda";
    c.solver.mode = "both";
    c.solver.grid = {64, 64, 1};
    c.outputs.push_back("grid");
    return c;
  }
  if (name == "fig7") {
    auto c = ensemble_scenario("fig7", "7", "beltrami");
    c.equilibrium.kind = "flat";
    c.solver.mode = "both";
    c.outputs.push_back("grid");
    return c;
  }
  if (name == "fig8" || name == "fig9") {
    const bool eight = name == "fig8";
    auto c = ensemble_scenario(name.c_str(), eight ? "8(b)" : "9(b)", eight ? "antisym" : "unit_norm");
    c.reference = eight ? "inverse_norm" : "field_charge";
    c.integrator.steps = 1000;
    c.solver.mode = "both";
    c.solver.grid = {64, 64, 1};
    c.outputs.push_back("grid");
    return c;
  }
  if (name == "fig10") {
    ScenarioConfig c;
    c.name = "fig10";
    c.figure = "10";
    c.operator_name = "landau_lifshitz";
    c.operator_params = {{"gamma", 1.0}, {"sigma", 2.0}, {"c", 0.5}};
    c.hamiltonian = "quadratic";
    c.domain.kind = "unbounded";
    c.init.kind = "gaussian";
    c.init.center = {0.0, 0.0, 2.0};
    c.init.sigma = 0.5;
    c.integrator.dt = 1e-3;
    c.integrator.steps = 2000;
    c.integrator.snapshot_every = 400;
    c.integrator.tracker_every = 100;
    c.histogram.shape = {32, 1, 32};
    c.histogram.center = {0.0, 0.0, 0.0};
    c.histogram.side = 8.0;
    c.trackers = {"x2", "y2", "z2", "energy"};
    c.outputs = {"histogram", "slice", "snapshots", "trackers", "moments"};
    return c;
  }
  std::string list;
  for (const auto& n : builtin_scenarios()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "' (built-in: " + list + ")");
}

ScenarioConfig parse_config(const std::string& text) { return from_table(parse_table(text, "config")); }

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_table(parse_table(ss.str(), path));
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << to_table(cfg) << "\n";
  return os.str();
}

ScenarioConfig apply_override(const ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like key=value");
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  auto trim = [](std::string& s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
  };
  trim(key);
  trim(value);
  // Bare words are taken as strings.
  const auto probe = "v = " + value;
  toml::table parsed;
  try {
    parsed = toml::parse(probe);
  } catch (const toml::parse_error&) {
    parsed = parse_table("v = \"" + value + "\"", "override");
  }
  toml::table root = to_table(cfg);
  toml::table* target = &root;
  std::string rest = key;
  for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
    const std::string section = rest.substr(0, dot);
    rest = rest.substr(dot + 1);
    toml::node* n = target->get(section);
    if (!n || !n->as_table()) throw ConfigError("override: unknown section '" + section + "'");
    target = n->as_table();
  }
  target->insert_or_assign(rest, *parsed.get("v"));
  return from_table(root);
}

bool needs_histogram(const ScenarioConfig& c) {
  if (c.solver.mode == "grid") return false;
  for (const char* o : {"histogram", "slice", "snapshots", "entropy", "comparison"}) {
    if (std::find(c.outputs.begin(), c.outputs.end(), o) != c.outputs.end()) return true;
  }
  return false;
}

void validate(const ScenarioConfig& c) {
  if (c.name.empty()) throw ConfigError("'name' is required");
  const auto op = scenario_operator(c);
  const int n = op.dim();
  const auto dyn = scenario_dynamics(c);
  dyn.validate();
  check_choice(c.noise.map, {"identity", "diagonal"}, "noise.map");
  check_choice(c.domain.kind, {"box", "unbounded"}, "domain.kind");
  check_choice(c.init.kind, {"flat", "gaussian", "point"}, "init.kind");
  check_choice(c.integrator.scheme, {"heun", "midpoint"}, "integrator.scheme");
  check_choice(c.solver.mode, {"particles", "grid", "both"}, "solver.mode");
  check_choice(c.solver.grid_init, {"flat", "smooth_random"}, "solver.grid_init");
  check_choice(c.solver.beta_mode, {"fixed", "quadrature", "energy_consistent"}, "solver.beta_mode");
  check_choice(c.equilibrium.kind,
               {"none", "flat", "casimir_foliation", "zeta_potential", "boltzmann", "casimir_boltzmann"},
               "equilibrium.kind");
  check_choice(c.reference, {"none", "inverse_norm", "field_charge"}, "reference");
  profile_from_string(c.equilibrium.profile);
  entropy_kind_from_string(c.entropy);
  for (const auto& o : c.outputs) {
    if (!kOutputs.count(o)) throw ConfigError("unknown output '" + o + "'");
  }
  for (const auto& t : c.trackers) {
    if (!kTrackers.count(t)) throw ConfigError("unknown tracker '" + t + "'");
    if (t == "energy" && c.hamiltonian == "none") throw ConfigError("tracker 'energy' needs a hamiltonian");
  }
  if (!(c.integrator.dt > 0.0) || !std::isfinite(c.integrator.dt)) throw ConfigError("integrator.dt must be > 0");
  if (c.integrator.steps == 0) throw ConfigError("integrator.steps must be >= 1");
  if (c.integrator.tracker_every == 0) throw ConfigError("integrator.tracker_every must be >= 1");
  if (c.solver.particles == 0) throw ConfigError("solver.particles must be >= 1");
  if (c.init.kind != "flat" && static_cast<int>(c.init.center.size()) != n) {
    throw ConfigError("init.center needs one entry per dimension");
  }
  if (!(c.init.sigma > 0.0)) throw ConfigError("init.sigma must be > 0");
  if (!(c.init.side > 0.0)) throw ConfigError("init.side must be > 0");
  if (c.solver.grid_t_end < 0.0) throw ConfigError("solver.grid_t_end must be >= 0");

  const bool grid = c.solver.mode != "particles";
  if (grid) {
    if (n != 3) throw ConfigError("the grid solver needs a 3D operator");
    if (c.domain.kind != "box") throw ConfigError("the grid solver needs a periodic box domain");
    if (c.init.kind != "flat") throw ConfigError("the grid solver starts from flat or smooth_random data only");
    if (c.friction.enabled && c.friction.adaptive && c.solver.beta_mode == "fixed") {
      throw ConfigError("adaptive friction on the grid needs beta_mode quadrature or energy_consistent");
    }
  }
  if (c.solver.beta_mode != "fixed" && !c.friction.enabled) {
    throw ConfigError("solver.beta_mode other than fixed needs friction.enabled");
  }
  if (needs_histogram(c)) {
    if (n < 3) throw ConfigError("histograms need at least three coordinates");
    (void)scenario_histogram_layout(c);
  }
  if (grid) (void)scenario_grid_layout(c);
  (void)scenario_equilibrium(c);
  (void)scenario_trackers(c);
}

CatalogOperator scenario_operator(const ScenarioConfig& c) { return catalog_operator(c.operator_name, c.operator_params); }

Dynamics scenario_dynamics(const ScenarioConfig& c) {
  const auto op = scenario_operator(c);
  const int n = op.dim();
  Dynamics d{op.as_operator(), catalog_hamiltonian(c.hamiltonian, c.hamiltonian_params, n), {}, {}, {},
             op.excluded_radius};
  d.noise.amplitude = c.noise.amplitude;
  if (c.noise.map == "diagonal") {
    if (static_cast<int>(c.noise.scales.size()) != n) throw ConfigError("noise.scales needs one entry per dimension");
    d.noise.map = CoordinateMap::diagonal(c.noise.scales);
  } else if (c.noise.map != "identity") {
    throw ConfigError("noise.map '" + c.noise.map + "' is not one of: identity, diagonal");
  }
  d.friction = {c.friction.enabled, c.friction.beta, c.friction.adaptive};
  if (c.domain.kind == "box") {
    if (!c.domain.center.empty() && static_cast<int>(c.domain.center.size()) != n) {
      throw ConfigError("domain.center needs one entry per dimension");
    }
    d.domain = DomainSpec::periodic(c.domain.side, c.domain.center);
  } else {
    d.domain = DomainSpec::unbounded();
  }
  d.scheme = c.integrator.scheme == "midpoint" ? Scheme::midpoint : Scheme::heun;
  d.validate();
  return d;
}

InitSpec scenario_init(const ScenarioConfig& c) {
  InitSpec s;
  if (c.init.kind == "gaussian") s.kind = InitSpec::Kind::gaussian;
  if (c.init.kind == "point") s.kind = InitSpec::Kind::point;
  s.center = c.init.center;
  s.sigma = c.init.sigma;
  s.flat_side = c.init.side;
  return s;
}

IntegratorSpec scenario_integrator(const ScenarioConfig& c) {
  return {c.integrator.dt, c.integrator.steps, c.integrator.snapshot_every, c.integrator.tracker_every};
}

std::vector<Tracker> scenario_trackers(const ScenarioConfig& c) {
  std::vector<Tracker> out;
  const auto H = catalog_hamiltonian(c.hamiltonian, c.hamiltonian_params, scenario_operator(c).dim());
  for (const auto& t : c.trackers) {
    if (t == "casimir") {
      out.push_back({t, [](std::span<const double> x) { return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }});
    } else if (t == "energy") {
      if (!H) throw ConfigError("tracker 'energy' needs a hamiltonian");
      out.push_back({t, [H](std::span<const double> x) { return (*H)(x); }});
    } else if (t == "x2" || t == "y2" || t == "z2") {
      const int a = t[0] - 'x';
      out.push_back({t, [a](std::span<const double> x) { return x[a] * x[a]; }});
    } else if (t == "radius") {
      out.push_back({t, [](std::span<const double> x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }});
    } else {
      throw ConfigError("unknown tracker '" + t + "'");
    }
  }
  return out;
}

std::optional<EquilibriumSpec> scenario_equilibrium(const ScenarioConfig& c) {
  const auto& e = c.equilibrium;
  if (e.kind == "none") return std::nullopt;
  EquilibriumSpec s;
  s.profile = profile_from_string(e.profile);
  s.gamma = e.gamma;
  s.beta = e.beta;
  const auto op = scenario_operator(c);
  auto witness = [&]() -> const IntegrabilityWitness& {
    if (!op.witness) throw ConfigError("equilibrium '" + e.kind + "' needs an operator with a Casimir witness");
    return *op.witness;
  };
  auto hamiltonian = [&] {
    auto H = catalog_hamiltonian(c.hamiltonian, c.hamiltonian_params, op.dim());
    if (!H) throw ConfigError("equilibrium '" + e.kind + "' needs a hamiltonian");
    return *H;
  };
  if (e.kind == "flat") {
    s.kind = EquilibriumSpec::Kind::flat;
  } else if (e.kind == "casimir_foliation") {
    s.kind = EquilibriumSpec::Kind::casimir_foliation;
    s.lambda = witness().lambda;
    s.casimir = witness().casimir;
  } else if (e.kind == "zeta_potential") {
    const VectorField3* w = op.vector_field();
    if (!w) throw ConfigError("equilibrium 'zeta_potential' needs a 3D vector-form operator");
    s.kind = EquilibriumSpec::Kind::zeta_potential;
    const VectorField3 wc = *w;
    s.w_norm = [wc](std::span<const double> x) { return norm(wc(Vec3{x[0], x[1], x[2]})); };
    s.zeta = [](std::span<const double>) { return 0.0; };
  } else if (e.kind == "boltzmann") {
    s.kind = EquilibriumSpec::Kind::boltzmann;
    s.H0 = hamiltonian();
  } else {
    s.kind = EquilibriumSpec::Kind::casimir_boltzmann;
    s.H0 = hamiltonian();
    s.casimir = witness().casimir;
  }
  return s;
}

DensityGrid scenario_histogram_layout(const ScenarioConfig& c) {
  Vec3 center{};
  double side = c.histogram.side;
  if (!c.histogram.center.empty()) {
    if (c.histogram.center.size() != 3) throw ConfigError("histogram.center needs three entries");
    center = {c.histogram.center[0], c.histogram.center[1], c.histogram.center[2]};
  } else if (c.domain.kind == "box") {
    const auto d = DomainSpec::periodic(c.domain.side, c.domain.center);
    for (int a = 0; a < 3; ++a) center[a] = d.lower(a) + 0.5 * d.side;
  }
  if (side == 0.0) {
    if (c.domain.kind != "box") throw ConfigError("histogram.side is required on an unbounded domain");
    side = c.domain.side;
  }
  if (!(side > 0.0)) throw ConfigError("histogram.side must be > 0");
  return DensityGrid(c.histogram.shape, side, center);
}

DensityGrid scenario_grid_layout(const ScenarioConfig& c) {
  return DensityGrid::on_domain(c.solver.grid, scenario_dynamics(c).domain);
}

BetaMode scenario_beta_mode(const ScenarioConfig& c) {
  if (c.solver.beta_mode == "quadrature") return BetaMode::quadrature;
  if (c.solver.beta_mode == "energy_consistent") return BetaMode::energy_consistent;
  return BetaMode::fixed;
}

}  // namespace helidiff
