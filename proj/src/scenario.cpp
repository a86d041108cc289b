#include "helidiff/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "helidiff/errors.hpp"

namespace helidiff {
namespace {

constexpr int kManifestSchema = 1;

bool wants(const ScenarioConfig& c, const char* output) {
  return std::find(c.outputs.begin(), c.outputs.end(), output) != c.outputs.end();
}

// Files written by a run, keyed by path relative to the artifact directory.
class ArtifactLog {
 public:
  explicit ArtifactLog(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& rel) const { return dir_ / rel; }

  void text(const std::string& rel, const std::string& body) {
    write_text(path(rel), body);
    add(rel);
  }
  void grid(const std::string& rel, const DensityGrid& f) {
    write_grid(f, path(rel));
    add(rel);
    add(fs::path(rel).replace_extension(".json").string());
  }
  void slice(const std::string& rel, const DensityGrid& f) {
    write_slice_csv(f, f.shape[2] / 2, path(rel));
    add(rel);
  }

  nlohmann::json entries() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& rel : files_) {
      const fs::path p = path(rel);
      out.push_back({{"file", rel}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
    }
    return out;
  }

 private:
  void add(const std::string& rel) { files_.insert(fs::path(rel).generic_string()); }

  fs::path dir_;
  std::set<std::string> files_;
};

// Scalar field sampled on a finer copy of `layout` and block averaged back,
// so that it matches what a histogram of that layout measures.
DensityGrid sample_averaged(const DensityGrid& layout, const std::function<DensityGrid(const DensityGrid&)>& make) {
  std::array<int, 3> fine{};
  for (int a = 0; a < 3; ++a) fine[a] = layout.shape[a] * std::max(1, 64 / layout.shape[a]);
  return coarsen(make(DensityGrid(fine, layout.side, layout.center)), layout.shape);
}

std::string csv_trackers(const std::vector<TrackerSeries>& series) {
  std::string out = "name,t,mean,var,min,max,max_rel_drift\n";
  for (const auto& s : series) {
    for (const auto& r : s.rows) {
      out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.name, r.t, r.mean, r.var, r.min,
                         r.max, r.max_rel_drift);
    }
  }
  return out;
}

nlohmann::json ensemble_moments(const Ensemble& ens) {
  const int n = ens.dim;
  std::vector<std::vector<double>> first(n), second(n);
  for (std::size_t p = 0; p < ens.size(); ++p) {
    if (ens.flagged[p]) continue;
    const auto x = ens.particle(p);
    for (int a = 0; a < n; ++a) {
      first[a].push_back(x[a]);
      second[a].push_back(x[a] * x[a]);
    }
  }
  const double count = static_cast<double>(first.empty() ? 0 : first[0].size());
  nlohmann::json mean = nlohmann::json::array(), sq = nlohmann::json::array();
  for (int a = 0; a < n; ++a) {
    mean.push_back(count > 0 ? pairwise_sum(first[a]) / count : 0.0);
    sq.push_back(count > 0 ? pairwise_sum(second[a]) / count : 0.0);
  }
  return {{"particles", ens.size()}, {"active", count}, {"flagged", ens.flagged_count()}, {"mean", mean},
          {"mean_square", sq}};
}

struct ReferenceProfile {
  std::string kind;
  std::function<DensityGrid(const DensityGrid&)> make;
};

std::optional<ReferenceProfile> reference_profile(const ScenarioConfig& cfg, const CatalogOperator& op) {
  if (cfg.reference == "none") return std::nullopt;
  const VectorField3* wp = op.vector_field();
  if (!wp) throw ConfigError("reference '" + cfg.reference + "' needs a 3D vector-form operator");
  const VectorField3 w = *wp;
  if (cfg.reference == "inverse_norm") {
    return ReferenceProfile{cfg.reference, [w](const DensityGrid& layout) {
                              DensityGrid g = layout;
                              g.fill([w](std::span<const double> x) { return 1.0 / norm(w(Vec3{x[0], x[1], x[2]})); });
                              return g;
                            }};
  }
  // Charge of the normalized field.
  const VectorField3 w_hat(
      [w](const Vec3& x) {
        const Vec3 v = w(x);
        const double s = 1.0 / norm(v);
        return Vec3{v[0] * s, v[1] * s, v[2] * s};
      },
      [w](const Vec3& x) {
        // d(w/|w|) = (I - n n^T) dw / |w|
        const Vec3 v = w(x);
        const double r = norm(v);
        const Vec3 nv{v[0] / r, v[1] / r, v[2] / r};
        const Mat3 d = w.jacobian(x);
        Mat3 out{};
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += ((i == k ? 1.0 : 0.0) - nv[i] * nv[k]) * d[k][j];
            out[i][j] = s / r;
          }
        }
        return out;
      });
  return ReferenceProfile{cfg.reference, [w_hat](const DensityGrid& layout) {
                            DensityGrid g = layout;
                            g.fill([w_hat](std::span<const double> x) {
                              return field_charge_3d(w_hat, Vec3{x[0], x[1], x[2]});
                            });
                            return g;
                          }};
}

double fixed_beta(const ScenarioConfig& cfg) { return cfg.friction.enabled ? cfg.friction.beta : 0.0; }

}  // namespace

DensityGrid initial_grid(const std::string& kind, const DensityGrid& layout, std::uint64_t seed) {
  DensityGrid f = layout;
  if (kind == "flat") {
    std::fill(f.values.begin(), f.values.end(), 1.0);
    f.normalize();
    return f;
  }
  if (kind != "smooth_random") throw ConfigError("unknown grid init '" + kind + "'");
  std::mt19937_64 gen(seed ^ 0x5deece66dULL);
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  struct Mode {
    std::array<int, 3> k;
    double amp, phase;
  };
  std::vector<Mode> modes;
  for (int kx = 0; kx <= 2; ++kx) {
    for (int ky = -2; ky <= 2; ++ky) {
      for (int kz = -2; kz <= 2; ++kz) {
        const std::array<int, 3> k{kx, ky, kz};
        if (kx == 0 && (ky < 0 || (ky == 0 && kz <= 0))) continue;
        bool ok = true;
        for (int a = 0; a < 3; ++a) ok = ok && (k[a] == 0 || layout.shape[a] > 1);
        if (!ok) continue;
        modes.push_back({k, uniform() - 0.5, 2.0 * M_PI * uniform()});
      }
    }
  }
  double total = 0.0;
  for (const auto& m : modes) total += std::abs(m.amp);
  const double scale = total > 0.0 ? 0.5 / total : 0.0;  // keeps f >= 1/2 of the mean
  const double wave = 2.0 * M_PI / layout.side;
  f.fill([&](std::span<const double> x) {
    double v = 1.0;
    for (const auto& m : modes) {
      double phase = m.phase;
      for (int a = 0; a < 3; ++a) phase += wave * m.k[a] * (x[a] - layout.lower(a));
      v += scale * m.amp * std::cos(phase);
    }
    return v;
  });
  f.normalize();
  return f;
}

EntropyAux entropy_aux(const CatalogOperator& op) {
  EntropyAux aux;
  if (op.witness) aux.lambda = op.witness->lambda;
  if (const VectorField3* w = op.vector_field()) {
    const VectorField3 wc = *w;
    aux.w_norm = [wc](std::span<const double> x) { return norm(wc(Vec3{x[0], x[1], x[2]})); };
    aux.zeta = [](std::span<const double>) { return 0.0; };
  }
  aux.g = op.invariant_density ? op.invariant_density : ScalarField([](std::span<const double>) { return 1.0; });
  return aux;
}

nlohmann::json classify_scenario(const ScenarioConfig& cfg) {
  const auto op = scenario_operator(cfg);
  SampleSpec spec;
  spec.seed = cfg.seed;
  spec.excluded_radius = op.excluded_radius;
  if (op.excluded_radius > 0.0) {
    spec.lower.assign(op.dim(), -3.0);
    spec.upper.assign(op.dim(), 3.0);
  }
  const VolumeWeight g = op.invariant_density ? VolumeWeight::from(op.invariant_density, "invariant")
                                              : VolumeWeight::unit();
  return classify(op.as_operator(), g, spec, op.name).to_json();
}

RunResult run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  const auto op = scenario_operator(cfg);
  const Dynamics dyn = scenario_dynamics(cfg);
  const auto equilibrium = scenario_equilibrium(cfg);
  const auto reference = reference_profile(cfg, op);
  const EntropyKind entropy_kind = entropy_kind_from_string(cfg.entropy);
  const EntropyAux aux = entropy_aux(op);
  const bool run_particles = cfg.solver.mode != "grid";
  const bool run_grid = cfg.solver.mode != "particles";

  fs::create_directories(out_dir);
  ArtifactLog log(out_dir);
  RunResult result;
  result.dir = out_dir;
  const std::string config_text = serialize_config(cfg);
  log.text("config.toml", config_text);
  spdlog::info("scenario {} (figure {}), operator {}, mode {}", cfg.name, cfg.figure, cfg.operator_name,
               cfg.solver.mode);

  nlohmann::json comparison = nlohmann::json::object();
  if (equilibrium) comparison["equilibrium"] = cfg.equilibrium.kind;

  if (run_particles) {
    const bool deposit = needs_histogram(cfg);
    const DensityGrid hist_layout = deposit ? scenario_histogram_layout(cfg) : DensityGrid({1, 1, 1}, 1.0, Vec3{});
    const IntegratorSpec integ = scenario_integrator(cfg);
    Ensemble ens = initialize_ensemble(dyn.dim(), cfg.solver.particles, cfg.seed, scenario_init(cfg), dyn.domain);
    spdlog::info("particles: N = {}, dt = {}, steps = {}", ens.size(), integ.dt, integ.steps);

    EntropyTrace trace{entropy_kind, {}, {}};
    std::string orbit = "step,t,particle";
    for (int a = 0; a < dyn.dim(); ++a) orbit += fmt::format(",x{}", a);
    orbit += "\n";
    const std::size_t orbit_n = std::min<std::size_t>(cfg.orbit_particles, ens.size());
    const bool snapshots = wants(cfg, "snapshots");

    auto sink = [&](std::uint32_t step, double t, const Ensemble& e) {
      for (std::size_t p = 0; p < orbit_n; ++p) {
        orbit += fmt::format("{},{:.17g},{}", step, t, p);
        for (double v : e.particle(p)) orbit += fmt::format(",{:.17g}", v);
        orbit += "\n";
      }
      if (!deposit || e.flagged_count() == e.size()) return;
      DensityGrid h = deposit_histogram(e, hist_layout);
      h.time = t;
      trace.push(t, entropy(h, entropy_kind, aux).value);
      if (snapshots) log.grid(fmt::format("snapshots/particles_{:08d}.bin", step), h);
    };
    EnsembleHistory hist = run_ensemble(std::move(ens), dyn, integ, scenario_trackers(cfg), sink);
    result.flagged = hist.flagged;
    result.trackers = hist.trackers;
    result.moments = ensemble_moments(hist.final_state);
    if (hist.flagged > 0) spdlog::warn("{} particles flagged and frozen", hist.flagged);

    if (wants(cfg, "trackers") && !hist.trackers.empty()) log.text("trackers.csv", csv_trackers(hist.trackers));
    if (wants(cfg, "trackers") && !hist.beta_trace.empty()) {
      std::string b = "t,beta\n";
      for (const auto& [t, v] : hist.beta_trace) b += fmt::format("{:.17g},{:.17g}\n", t, v);
      log.text("beta.csv", b);
    }
    if (wants(cfg, "orbit") && orbit_n > 0) log.text("orbit.csv", orbit);
    if (wants(cfg, "moments")) log.text("moments.json", result.moments.dump(2) + "\n");

    if (deposit && hist.flagged < hist.final_state.size()) {
      DensityGrid h = deposit_histogram(hist.final_state, hist_layout);
      h.time = integ.dt * integ.steps;
      if (wants(cfg, "entropy") && !trace.times.empty()) log.text("entropy_particles.csv", trace.to_csv());
      if (wants(cfg, "histogram")) log.grid("particles_final.bin", h);
      if (wants(cfg, "slice")) log.slice("particles_final_slice.csv", h);
      if (equilibrium) {
        const auto eq = sample_averaged(h, [&](const DensityGrid& l) { return make_equilibrium(*equilibrium, l); });
        comparison["particles_vs_equilibrium"] = compare(h, eq).to_json();
      }
      if (reference) {
        const auto ref = sample_averaged(h, reference->make);
        comparison["reference"]["kind"] = reference->kind;
        comparison["reference"]["pearson_particles"] = pearson(h.values, ref.values);
      }
      result.particle_histogram = std::move(h);
      result.particle_entropy = std::move(trace);
    }
  }

  if (run_grid) {
    const DensityGrid layout = scenario_grid_layout(cfg);
    const FokkerPlanckOperator fp(dyn, layout);
    const BetaMode mode = scenario_beta_mode(cfg);
    DensityGrid f = initial_grid(cfg.solver.grid_init, layout, cfg.seed);
    const double beta0 = fp.beta_for(mode, fixed_beta(cfg), f.values);
    const double t_end = cfg.solver.grid_t_end > 0.0 ? cfg.solver.grid_t_end : cfg.integrator.dt * cfg.integrator.steps;
    const double dt_max = fp.stable_dt(beta0);
    const auto steps = static_cast<std::uint64_t>(std::ceil(t_end / dt_max));
    const double dt = t_end / static_cast<double>(steps);
    spdlog::info("grid: {}x{}x{}, dt = {:.3e}, steps = {}", layout.shape[0], layout.shape[1], layout.shape[2], dt,
                 steps);

    EntropyTrace trace{entropy_kind, {}, {}};
    std::string energy = "t,energy,beta\n";
    const std::uint64_t sample_every = std::max<std::uint64_t>(1, steps / std::max<std::uint32_t>(1, cfg.solver.entropy_samples));
    const std::uint64_t snap_every =
        cfg.solver.grid_snapshots > 0 ? std::max<std::uint64_t>(1, steps / cfg.solver.grid_snapshots) : 0;
    auto record = [&](std::uint64_t s, double beta) {
      trace.push(f.time, entropy(f, entropy_kind, aux).value);
      if (fp.has_hamiltonian()) energy += fmt::format("{:.17g},{:.17g},{:.17g}\n", f.time, fp.energy(f.values), beta);
      if (snap_every > 0 && s % snap_every == 0 && wants(cfg, "snapshots")) {
        log.grid(fmt::format("snapshots/grid_{:08d}.bin", s), f);
      }
    };
    record(0, beta0);
    ClipBudget budget;
    double beta = beta0;
    for (std::uint64_t s = 1; s <= steps; ++s) {
      beta = fp_step(f, fp, dt, mode, fixed_beta(cfg), budget);
      f.time = static_cast<double>(s) * dt;
      if (s % sample_every == 0 || s == steps) record(s, beta);
    }
    if (budget.events > 0) {
      spdlog::info("grid: clipped {:.3e} mass in {} cells over {} steps", budget.clipped_mass, budget.clipped_cells,
                   budget.events);
    }
    if (wants(cfg, "entropy")) {
      log.text("entropy_grid.csv", trace.to_csv());
      if (fp.has_hamiltonian()) log.text("energy_grid.csv", energy);
    }
    if (wants(cfg, "grid")) log.grid("grid_final.bin", f);
    if (wants(cfg, "slice")) log.slice("grid_final_slice.csv", f);
    if (equilibrium) comparison["grid_vs_equilibrium"] = compare(f, make_equilibrium(*equilibrium, layout)).to_json();
    if (reference) {
      comparison["reference"]["kind"] = reference->kind;
      comparison["reference"]["pearson_grid"] = pearson(f.values, reference->make(layout).values);
    }
    comparison["grid_clipped_mass"] = budget.clipped_mass;
    if (result.particle_histogram) {
      const DensityGrid& h = *result.particle_histogram;
      bool divisible = h.side == f.side && h.center == f.center;
      for (int a = 0; a < 3; ++a) divisible = divisible && f.shape[a] % h.shape[a] == 0;
      if (divisible) {
        comparison["particles_vs_grid"] = compare(h, coarsen(f, h.shape)).to_json();
      } else {
        comparison["particles_vs_grid"] = {{"note", "histogram and grid layouts are not nested"}};
      }
    }
    result.grid_final = std::move(f);
    result.grid_entropy = std::move(trace);
  }

  if (wants(cfg, "comparison") && !comparison.empty()) log.text("comparison.json", comparison.dump(2) + "\n");
  result.comparison = std::move(comparison);

  nlohmann::json manifest{{"schema_version", kManifestSchema},
                          {"scenario", cfg.name},
                          {"figure", cfg.figure},
                          {"seed", cfg.seed},
                          {"config_sha256", sha256_hex(config_text)},
                          {"outputs", log.entries()}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  result.manifest = std::move(manifest);
  spdlog::info("wrote {}", (out_dir / "manifest.json").string());
  return result;
}

}  // namespace helidiff
