#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "helidiff/config.hpp"
#include "helidiff/diagnostics.hpp"
#include "helidiff/io.hpp"

namespace helidiff {

/// Everything a run produced, in memory. The same data lives in the
/// artifact directory.
struct RunResult {
  fs::path dir;
  nlohmann::json manifest;
  nlohmann::json comparison;
  nlohmann::json moments;
  std::optional<DensityGrid> particle_histogram;
  std::optional<DensityGrid> grid_final;
  std::optional<EntropyTrace> particle_entropy;
  std::optional<EntropyTrace> grid_entropy;
  std::vector<TrackerSeries> trackers;
  std::size_t flagged = 0;
};

/// Initial grid density: flat, or a positive smooth low-mode perturbation
/// of flat drawn from `seed`.
DensityGrid initial_grid(const std::string& kind, const DensityGrid& layout, std::uint64_t seed);

/// Auxiliary fields of the entropy family for an operator.
EntropyAux entropy_aux(const CatalogOperator& op);

/// Validates cfg, runs the configured solvers and writes the artifact
/// directory, ending with manifest.json. Throws ConfigError before any
/// computation if cfg is invalid, NumericalError if a solver fails.
RunResult run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir);

/// Report of `classify` for the operator of cfg.
nlohmann::json classify_scenario(const ScenarioConfig& cfg);

}  // namespace helidiff
