#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "helidiff/operator.hpp"

namespace helidiff {

struct DomainSpec {
  enum class Kind { periodic_box, unbounded };
  Kind kind = Kind::periodic_box;
  std::vector<double> center;  // empty: box [0, side)^n
  double side = 6.283185307179586;

  static DomainSpec periodic(double side, std::vector<double> center = {});
  static DomainSpec unbounded();

  double lower(int axis) const;
  /// Maps x into the box; no-op for unbounded domains.
  void wrap(std::span<double> x) const;
};

struct NoiseSpec {
  /// Per-axis multiplier of the unit white noise; a single entry is broadcast.
  std::vector<double> amplitude{1.0};
  std::optional<CoordinateMap> map;  // empty: identity

  double amplitude_at(int r) const;
  bool silent() const;
};

struct FrictionSpec {
  bool enabled = false;
  double beta = 0.0;
  /// Re-estimate beta from the ensemble at every tracker step.
  bool adaptive = false;
};

/// Stratonovich-consistent one-step schemes.
///   heun:     stochastic trapezoidal predictor-corrector (default)
///   midpoint: implicit stochastic midpoint, solved by fixed-point
///             iteration; conserves quadratic Casimirs exactly
enum class Scheme { heun, midpoint };

/// Everything that defines the right-hand side of the particle SDE.
struct Dynamics {
  OperatorField J;
  std::optional<Hamiltonian> H0;
  NoiseSpec noise;
  FrictionSpec friction;
  DomainSpec domain;
  /// Particles entering |x| < excluded_radius are flagged and frozen.
  double excluded_radius = 0.0;
  Scheme scheme = Scheme::heun;

  int dim() const { return J.dim(); }
  void validate() const;
};

struct Ensemble {
  int dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> positions;  // row-major N x dim
  std::vector<std::uint8_t> flagged;
  std::uint32_t step = 0;  // steps taken so far; selects the RNG counter

  Ensemble() = default;
  Ensemble(int dim, std::size_t count, std::uint64_t seed);

  std::size_t size() const { return flagged.size(); }
  std::span<double> particle(std::size_t i) { return {positions.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> particle(std::size_t i) const {
    return {positions.data() + i * dim, static_cast<std::size_t>(dim)};
  }
  std::size_t flagged_count() const;
};

struct InitSpec {
  enum class Kind { flat, gaussian, point };
  Kind kind = Kind::flat;
  std::vector<double> center;  // gaussian / point; flat uses the domain box
  double sigma = 0.5;
  /// Box side for flat initial data on an unbounded domain.
  double flat_side = 6.283185307179586;
};

/// Draws initial positions from the initial-condition RNG stream.
Ensemble initialize_ensemble(int dim, std::size_t count, std::uint64_t seed, const InitSpec& init,
                             const DomainSpec& domain);

/// Drift a(x) and noise matrix V(x) = J R^T diag(amplitude), n x n
/// row-major, of the Stratonovich SDE dx = a dt + V o dW with
/// a = J grad H0 - (beta/2) V V^T grad H0.
void sde_coefficients(const Dynamics& dyn, double beta, std::span<const double> x, std::span<double> drift,
                      std::span<double> V);

/// One step of dyn.scheme for every unflagged particle, with the same
/// Wiener increment in every stage. Advances ens.step. Returns the number of
/// particles newly flagged (non-finite state, excluded ball, or a midpoint
/// iteration that failed to converge).
std::size_t step_stratonovich(Ensemble& ens, const Dynamics& dyn, double dt, double beta);

/// Ensemble estimate of the friction constant: <d_j(V V^T grad H0)^j> /
/// <|V^T grad H0|^2>. Throws NumericalError for a vanishing denominator.
double ensemble_beta(const Ensemble& ens, const Dynamics& dyn);

/// Per-particle scalar recorded at tracker steps.
struct Tracker {
  std::string name;
  std::function<double(std::span<const double>)> fn;
};

struct TrackerRow {
  double t = 0.0;
  double mean = 0.0, var = 0.0, min = 0.0, max = 0.0;
  /// max_p |q_p(t) - q_p(0)| / max(|q_p(0)|, tiny)
  double max_rel_drift = 0.0;
};

struct TrackerSeries {
  std::string name;
  std::vector<TrackerRow> rows;
};

struct Snapshot {
  std::uint32_t step = 0;
  double t = 0.0;
  std::vector<double> positions;
};

struct IntegratorSpec {
  double dt = 1e-3;
  std::uint32_t steps = 1000;
  std::uint32_t snapshot_every = 0;  // 0: final snapshot only
  std::uint32_t tracker_every = 100;
};

struct EnsembleHistory {
  std::vector<Snapshot> snapshots;
  std::vector<TrackerSeries> trackers;
  std::vector<std::pair<double, double>> beta_trace;  // (t, beta) when friction is on
  std::size_t flagged = 0;
  Ensemble final_state;
};

/// Receives (step, t, ensemble) at snapshot steps instead of storing copies.
using SnapshotSink = std::function<void(std::uint32_t, double, const Ensemble&)>;

/// Integrates the ensemble for spec.steps steps, collecting snapshots and
/// tracker series. Deterministic for fixed inputs, independent of threads.
/// With a sink, snapshots are handed to it and EnsembleHistory::snapshots
/// stays empty.
EnsembleHistory run_ensemble(Ensemble ens, const Dynamics& dyn, const IntegratorSpec& spec,
                             const std::vector<Tracker>& trackers = {}, const SnapshotSink& sink = {});

}  // namespace helidiff
