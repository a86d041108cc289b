#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "helidiff/catalog.hpp"
#include "helidiff/classification.hpp"
#include "helidiff/fokker_planck.hpp"
#include "helidiff/sde.hpp"

namespace helidiff {

/// Declarative description of one run. Every field has a default except
/// name and operator_name.
struct ScenarioConfig {
  std::string name;
  std::string figure;  // figure panel reproduced by a built-in scenario
  std::uint64_t seed = 1;

  std::string operator_name;
  ParamMap operator_params;
  std::string hamiltonian = "none";
  ParamMap hamiltonian_params;

  struct Noise {
    std::vector<double> amplitude{1.0};
    std::string map = "identity";  // identity | diagonal
    std::vector<double> scales;    // diagonal map entries
    bool operator==(const Noise&) const = default;
  } noise;

  struct Friction {
    bool enabled = false;
    double beta = 0.0;
    bool adaptive = false;
    bool operator==(const Friction&) const = default;
  } friction;

  struct Domain {
    std::string kind = "box";  // box | unbounded
    std::vector<double> center{0.0, 0.0, 0.0};
    double side = 6.283185307179586;
    bool operator==(const Domain&) const = default;
  } domain;

  struct Init {
    std::string kind = "flat";  // flat | gaussian | point
    std::vector<double> center;
    double sigma = 0.5;
    double side = 6.283185307179586;  // flat initial data on an unbounded domain
    bool operator==(const Init&) const = default;
  } init;

  struct Integrator {
    double dt = 0.01;
    std::uint32_t steps = 500;
    std::uint32_t snapshot_every = 0;
    std::uint32_t tracker_every = 10;
    std::string scheme = "heun";  // heun | midpoint
    bool operator==(const Integrator&) const = default;
  } integrator;

  struct Solver {
    std::string mode = "particles";  // particles | grid | both
    std::uint64_t particles = 200000;
    std::array<int, 3> grid{64, 64, 64};
    std::string grid_init = "flat";        // flat | smooth_random
    std::string beta_mode = "fixed";       // fixed | quadrature | energy_consistent
    double grid_t_end = 0.0;               // 0: integrator.dt * integrator.steps
    std::uint32_t grid_snapshots = 0;      // evenly spaced grid snapshots
    std::uint32_t entropy_samples = 100;   // entropy trace length of the grid run
    bool operator==(const Solver&) const = default;
  } solver;

  struct Histogram {
    std::array<int, 3> shape{16, 16, 1};
    std::vector<double> center;  // empty: domain center
    double side = 0.0;           // 0: domain side
    bool operator==(const Histogram&) const = default;
  } histogram;

  /// Analytic density the final state is compared against.
  struct Equilibrium {
    std::string kind = "none";  // none | flat | casimir_foliation | zeta_potential | boltzmann | casimir_boltzmann
    std::string profile = "identity";
    double gamma = 0.0;
    double beta = 1.0;
    bool operator==(const Equilibrium&) const = default;
  } equilibrium;

  /// Profile reported by correlation only: none | inverse_norm | field_charge.
  std::string reference = "none";
  std::vector<std::string> trackers;
  std::uint32_t orbit_particles = 0;
  std::string entropy = "S";
  std::vector<std::string> outputs{"histogram", "slice", "trackers", "entropy", "comparison"};

  bool operator==(const ScenarioConfig&) const = default;
};

/// Names of the built-in scenarios.
const std::vector<std::string>& builtin_scenarios();
/// Desk-scale defaults of a built-in scenario; throws ConfigError if unknown.
ScenarioConfig builtin_scenario(const std::string& name);
/// Particle count restored by --paper-scale.
inline constexpr std::uint64_t kPaperScaleParticles = 8000000;

ScenarioConfig parse_config(const std::string& toml_text);
ScenarioConfig load_config(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);
/// Applies "section.key = value" (TOML syntax) on top of cfg.
ScenarioConfig apply_override(const ScenarioConfig& cfg, const std::string& assignment);

/// True when the particle run feeds a histogram (histogram, slice,
/// snapshots, entropy or comparison outputs).
bool needs_histogram(const ScenarioConfig& cfg);

/// Checks every field and builds every object the run needs; throws
/// ConfigError on the first problem.
void validate(const ScenarioConfig& cfg);

/// Pieces of a validated scenario.
CatalogOperator scenario_operator(const ScenarioConfig& cfg);
Dynamics scenario_dynamics(const ScenarioConfig& cfg);
InitSpec scenario_init(const ScenarioConfig& cfg);
IntegratorSpec scenario_integrator(const ScenarioConfig& cfg);
std::vector<Tracker> scenario_trackers(const ScenarioConfig& cfg);
std::optional<EquilibriumSpec> scenario_equilibrium(const ScenarioConfig& cfg);
/// Layout of the particle histogram.
DensityGrid scenario_histogram_layout(const ScenarioConfig& cfg);
/// Layout of the grid solver.
DensityGrid scenario_grid_layout(const ScenarioConfig& cfg);
BetaMode scenario_beta_mode(const ScenarioConfig& cfg);

}  // namespace helidiff
