#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "helidiff/operator.hpp"
#include "helidiff/sde.hpp"

namespace helidiff {

/// Probability density at the cell centers of a periodic box.
/// Storage is row-major with x slowest: index = (i * Ny + j) * Nz + k.
/// A shape entry of 1 makes the density independent of that axis.
struct DensityGrid {
  std::array<int, 3> shape{64, 64, 64};
  Vec3 center{};
  double side = 6.283185307179586;
  double time = 0.0;
  std::vector<double> values;

  DensityGrid() = default;
  DensityGrid(std::array<int, 3> shape, double side, Vec3 center);
  /// Grid covering the box of a periodic domain.
  static DensityGrid on_domain(std::array<int, 3> shape, const DomainSpec& domain);

  std::size_t size() const { return values.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k;
  }
  double spacing(int axis) const { return side / shape[axis]; }
  double lower(int axis) const { return center[axis] - 0.5 * side; }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
  Vec3 cell_center(int i, int j, int k) const;
  Vec3 cell_center(std::size_t idx) const;

  double mass() const;
  /// Rescales to unit mass. Throws NumericalError if the mass is not positive.
  void normalize();
  void fill(const ScalarField& f);
  bool same_layout(const DensityGrid& other) const;
};

/// Closed-form stationary densities.
struct EquilibriumSpec {
  enum class Kind { flat, casimir_foliation, zeta_potential, boltzmann, casimir_boltzmann };
  /// Profile function F applied to the Casimir.
  enum class Profile { identity, sin, cos, zero };

  Kind kind = Kind::flat;
  ScalarField lambda;   // casimir_foliation: w = lambda grad C
  ScalarField casimir;  // casimir_foliation, casimir_boltzmann
  Profile profile = Profile::identity;
  double gamma = 0.0;
  ScalarField w_norm;  // zeta_potential: f = A exp(-zeta) / |w|
  ScalarField zeta;
  std::optional<Hamiltonian> H0;  // boltzmann, casimir_boltzmann
  double beta = 1.0;
};

double apply_profile(EquilibriumSpec::Profile p, double c);
EquilibriumSpec::Profile profile_from_string(const std::string& name);

/// Evaluates the closed form at the cell centers and normalizes.
DensityGrid make_equilibrium(const EquilibriumSpec& spec, const DensityGrid& layout);

/// How the friction constant is chosen at every right-hand-side evaluation.
enum class BetaMode {
  fixed,             // dyn.friction.beta
  quadrature,        // compute_beta on the current density
  energy_consistent  // beta making the discrete dE/dt vanish
};

/// Conservative centered-difference discretization of the Fokker-Planck
/// equation of a 3D Dynamics on a periodic grid:
///   df/dt = d_i [ -(u0 - beta/2 u1)_i f + 1/2 V_ik d_j (V_jk f) ],
/// with V = J R^T diag(amplitude), u0 = J grad H0, u1 = V V^T grad H0.
/// All coefficients are precomputed at the cell centers.
class FokkerPlanckOperator {
 public:
  FokkerPlanckOperator(const Dynamics& dyn, const DensityGrid& layout);

  const DensityGrid& layout() const { return layout_; }
  bool has_hamiltonian() const { return !h0_.empty(); }

  /// out = RHS(f) at friction constant beta.
  void rhs(std::span<const double> f, double beta, std::span<double> out) const;
  std::vector<double> rhs(std::span<const double> f, double beta) const;

  /// Quadrature form of the beta identity:
  ///   beta = -sum (V^T grad H0).(V^T grad f) / sum f |V^T grad H0|^2.
  /// Throws NumericalError if the denominator is below 1e-12.
  double compute_beta(std::span<const double> f) const;
  /// Beta for which sum H0 RHS(f) dV = 0 exactly.
  double energy_consistent_beta(std::span<const double> f) const;
  double beta_for(BetaMode mode, double fixed, std::span<const double> f) const;

  /// sum f H0 dV.
  double energy(std::span<const double> f) const;

  /// Explicit step bound: min(0.2 h^2 / max |V|_F^2 / 2, 0.5 h / max |drift|).
  double heuristic_dt(double beta) const;
  /// Power-iteration estimate of the spectral radius of f -> RHS(f).
  double spectral_radius(double beta, int iterations = 40) const;
  /// heuristic_dt, reduced to 1.9 / rho if rho * dt exceeds 2.
  double stable_dt(double beta) const;

 private:
  DensityGrid layout_;
  std::vector<double> V_;   // 9 per cell, row-major V(i, k)
  std::vector<double> u0_;  // 3 per cell
  std::vector<double> u1_;  // 3 per cell
  std::vector<double> h0_;  // H0 per cell (empty without H0)
  std::vector<double> vg_;  // V^T grad H0, 3 per cell
};

/// Expanded evaluator 1/2 (Lap_perp f + b.grad f + f Bcharge / 4) of the pure
/// diffusion equation for a 3D vector field w (unit amplitude, R = I).
/// Lap_perp uses centered differences; b and the field charge are evaluated
/// pointwise.
std::vector<double> fp_rhs_expanded(const DensityGrid& f, const VectorField3& w);

/// Pointwise nD diffusion right-hand side 1/2 d_i [J^ik d_j (J^jk f)] by
/// nested central differences with step h.
double fp_rhs_pointwise(const OperatorField& J, const ScalarField& f, std::span<const double> x, double h = 1e-3);

/// Running record of positivity clipping.
struct ClipBudget {
  double limit = 1e-6;
  double clipped_mass = 0.0;
  std::size_t clipped_cells = 0;
  std::size_t events = 0;
};

/// One explicit RK2 (Heun) step. Negative values are clipped to zero and the
/// pre-step mass restored; throws NumericalError once the cumulative clipped
/// mass exceeds budget.limit. Returns the beta used in the last stage.
double fp_step(DensityGrid& f, const FokkerPlanckOperator& op, double dt, BetaMode mode, double fixed_beta,
               ClipBudget& budget);

/// ||RHS(f)||_1 dV.
double stationary_residual(const DensityGrid& f, const FokkerPlanckOperator& op, double beta);

}  // namespace helidiff
