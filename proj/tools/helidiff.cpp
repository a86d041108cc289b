#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "helidiff/catalog.hpp"
#include "helidiff/config.hpp"
#include "helidiff/diagnostics.hpp"
#include "helidiff/errors.hpp"
#include "helidiff/io.hpp"
#include "helidiff/scenario.hpp"

namespace fs = std::filesystem;
using namespace helidiff;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// A config file, a built-in scenario name, or a bare catalog operator name.
ScenarioConfig resolve_config(const std::string& arg) {
  if (fs::exists(arg)) return load_config(arg);
  const auto& builtins = builtin_scenarios();
  if (std::find(builtins.begin(), builtins.end(), arg) != builtins.end()) return builtin_scenario(arg);
  const auto& ops = catalog_names();
  if (std::find(ops.begin(), ops.end(), arg) != ops.end()) {
    ScenarioConfig c;
    c.name = arg;
    c.operator_name = arg;
    return c;
  }
  throw ConfigError("'" + arg + "' is neither a config file, a built-in scenario nor a catalog operator");
}

void emit(const nlohmann::json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic diffusion under antisymmetric operators: particle ensembles, Fokker-Planck grids, "
               "operator classification"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::string classify_arg, classify_out;
  auto* classify_cmd = app.add_subcommand("classify", "Classify the operator of a config, scenario or catalog name");
  classify_cmd->add_option("config", classify_arg, "Config file, built-in scenario or operator name")->required();
  classify_cmd->add_option("--out", classify_out, "Write the JSON report here instead of stdout");

  std::string run_arg, run_out;
  bool paper_scale = false;
  std::vector<std::string> overrides;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its artifact directory");
  run_cmd->add_option("config", run_arg, "Config file or built-in scenario name")->required();
  run_cmd->add_flag("--paper-scale", paper_scale, "Use the paper's ensemble size");
  run_cmd->add_option("--out", run_out, "Artifact directory (default runs/<name>)");
  run_cmd->add_option("--set", overrides, "Override a config key, e.g. --set integrator.steps=100");

  std::string cmp_a, cmp_b, cmp_out;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare two density artifacts (.bin, .json sidecar or slice .csv)");
  cmp_cmd->add_option("a", cmp_a, "First density")->required();
  cmp_cmd->add_option("b", cmp_b, "Second density")->required();
  cmp_cmd->add_option("--out", cmp_out, "Write the JSON report here instead of stdout");

  std::string show_arg;
  auto* show_cmd = app.add_subcommand("config", "Print the TOML of a built-in scenario or config file");
  show_cmd->add_option("config", show_arg, "Config file or built-in scenario name")->required();

  app.add_subcommand("scenarios", "List the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto logger = spdlog::stderr_color_mt("helidiff");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (classify_cmd->parsed()) {
      const auto cfg = resolve_config(classify_arg);
      emit(classify_scenario(cfg), classify_out);
    } else if (run_cmd->parsed()) {
      auto cfg = resolve_config(run_arg);
      for (const auto& o : overrides) cfg = apply_override(cfg, o);
      if (paper_scale && cfg.orbit_particles == 0) cfg.solver.particles = kPaperScaleParticles;
      const fs::path out = run_out.empty() ? fs::path("runs") / cfg.name : fs::path(run_out);
      const auto result = run_scenario(cfg, out);
      if (!result.comparison.empty()) std::cout << result.comparison.dump(2) << "\n";
    } else if (cmp_cmd->parsed()) {
      const auto report = compare(load_density(cmp_a), load_density(cmp_b));
      emit(report.to_json(), cmp_out);
    } else if (show_cmd->parsed()) {
      std::cout << serialize_config(resolve_config(show_arg));
    } else {
      for (const auto& name : builtin_scenarios()) {
        const auto c = builtin_scenario(name);
        std::cout << name << "\tfigure " << c.figure << "\t" << c.operator_name << "\n";
      }
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
