#include <doctest.h>

#include <algorithm>

#include "helidiff/errors.hpp"
#include "helidiff/parallel.hpp"
#include "helidiff/scenario.hpp"

using namespace helidiff;

namespace {

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / "helidiff_test_scenario" / name; }

ScenarioConfig small_fig7() {
  auto c = builtin_scenario("fig7");
  c.solver.particles = 3000;
  c.solver.grid = {8, 8, 8};
  c.integrator.steps = 30;
  c.integrator.snapshot_every = 10;
  c.solver.grid_t_end = 0.05;
  return c;
}

}  // namespace

TEST_CASE("a run writes a manifest whose hashes match the files") {
  const auto dir = scratch("fig7");
  fs::remove_all(dir);
  const auto r = run_scenario(small_fig7(), dir);
  const auto m = nlohmann::json::parse(read_text(dir / "manifest.json"));
  CHECK(m == r.manifest);
  CHECK(m["schema_version"] == 1);
  CHECK(m["scenario"] == "fig7");
  CHECK(m["figure"] == "7");
  CHECK(m["config_sha256"] == sha256_file(dir / "config.toml"));
  std::vector<std::string> files;
  for (const auto& e : m["outputs"]) {
    files.push_back(e["file"]);
    CHECK(e["sha256"] == sha256_file(dir / e["file"].get<std::string>()));
    CHECK(e["bytes"] == fs::file_size(dir / e["file"].get<std::string>()));
  }
  for (const char* f : {"config.toml", "particles_final.bin", "grid_final.bin", "comparison.json",
                        "entropy_particles.csv", "entropy_grid.csv", "snapshots/particles_00000030.bin"}) {
    CAPTURE(f);
    CHECK(std::find(files.begin(), files.end(), f) != files.end());
  }
  CHECK(r.comparison.contains("particles_vs_equilibrium"));
  CHECK(r.comparison.contains("grid_vs_equilibrium"));
  CHECK(r.comparison.contains("particles_vs_grid"));
  CHECK(r.particle_entropy->times.size() == 4);
  CHECK(r.grid_final->time == doctest::Approx(0.05));
  // Stored artifacts reload to the in-memory results.
  CHECK(load_density(dir / "grid_final.bin").values == r.grid_final->values);
}

TEST_CASE("manifests do not depend on the thread count") {
  std::vector<nlohmann::json> outputs;
  for (int threads : {1, 3}) {
    set_thread_count(threads);
    const auto dir = scratch("threads" + std::to_string(threads));
    fs::remove_all(dir);
    outputs.push_back(run_scenario(small_fig7(), dir).manifest);
  }
  set_thread_count(0);
  CHECK(outputs[0] == outputs[1]);
}

TEST_CASE("invalid configs fail before any output is written") {
  auto c = small_fig7();
  c.integrator.dt = -1.0;
  const auto dir = scratch("invalid");
  fs::remove_all(dir);
  CHECK_THROWS_AS(run_scenario(c, dir), ConfigError);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("orbit scenario records trajectories and Casimir drift") {
  auto c = builtin_scenario("fig2a");
  c.integrator.steps = 200;
  const auto dir = scratch("fig2a");
  fs::remove_all(dir);
  const auto r = run_scenario(c, dir);
  CHECK(fs::exists(dir / "orbit.csv"));
  CHECK(fs::exists(dir / "trackers.csv"));
  REQUIRE(r.trackers.size() == 2);
  CHECK(r.trackers[0].name == "casimir");
  // Noise-free midpoint orbit keeps both quadratic invariants.
  CHECK(r.trackers[0].rows.back().max_rel_drift < 1e-10);
  CHECK(r.trackers[1].rows.back().max_rel_drift < 1e-10);
}

TEST_CASE("smooth random grid init is positive, normalized and respects unit axes") {
  const DensityGrid layout({16, 16, 1}, 2.0 * M_PI, Vec3{});
  const auto f = initial_grid("smooth_random", layout, 3);
  CHECK(f.mass() == doctest::Approx(1.0));
  const double mean = 1.0 / (layout.side * layout.side * layout.side);
  CHECK(*std::min_element(f.values.begin(), f.values.end()) >= 0.5 * mean);
  CHECK(*std::max_element(f.values.begin(), f.values.end()) > 1.05 * mean);
  CHECK(initial_grid("smooth_random", layout, 3).values == f.values);
  CHECK(initial_grid("smooth_random", layout, 4).values != f.values);
  CHECK_THROWS_AS(initial_grid("noise", layout, 3), ConfigError);
}

TEST_CASE("classification through scenario configs") {
  auto label = [](const char* op) {
    ScenarioConfig c;
    c.name = op;
    c.operator_name = op;
    return classify_scenario(c)["label"].get<std::string>();
  };
  CHECK(label("beltrami") == "strong_beltrami");
  CHECK(label("grad_casimir") == "poisson");
  CHECK(label("landau_lifshitz") == "general_antisymmetric");
}
