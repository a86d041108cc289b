#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "helidiff/classification.hpp"
#include "helidiff/fokker_planck.hpp"
#include "helidiff/sde.hpp"

namespace helidiff {

enum class DepositKind { cic, nearest };

/// Density histogram of the unflagged particles on the layout of `layout`,
/// using the first three coordinates. Positions are wrapped into the box.
/// Particles are processed in fixed chunks whose private grids are merged in
/// chunk order, so the result does not depend on the thread count.
/// Throws ConfigError if no particle is left to deposit.
DensityGrid deposit_histogram(const Ensemble& ens, const DensityGrid& layout, DepositKind kind = DepositKind::cic);

/// Averages over every axis not listed in `keep`; those axes get extent 1.
DensityGrid marginalize(const DensityGrid& f, std::array<bool, 3> keep);
/// Block average to `shape`; each entry must divide the current extent.
DensityGrid coarsen(const DensityGrid& f, std::array<int, 3> shape);

enum class EntropyKind { S, sigma_lambda, sigma_zeta, S_c, sigma };
std::string to_string(EntropyKind k);
EntropyKind entropy_kind_from_string(const std::string& name);

/// Auxiliary fields of the entropy family:
///   sigma_lambda: -sum f log(f lambda)
///   sigma_zeta:   -sum f [log(f |w|) + zeta]
///   sigma:        S_c + <log g>
struct EntropyAux {
  ScalarField lambda;
  ScalarField w_norm;
  ScalarField zeta;
  ScalarField g;
};

inline constexpr double kDensityFloor = 1e-30;

struct EntropyValue {
  double value = 0.0;
  /// Cells below kDensityFloor, which contribute nothing.
  std::size_t floored_cells = 0;
};

/// Midpoint-rule quadrature of the chosen entropy.
EntropyValue entropy(const DensityGrid& f, EntropyKind kind, const EntropyAux& aux = {});

struct EntropyTrace {
  EntropyKind kind = EntropyKind::S;
  std::vector<double> times;
  std::vector<double> values;

  /// Appends a sample; times must increase strictly and values be finite.
  void push(double t, double v);
  std::string to_csv() const;
};

struct EntropyProduction {
  double total = 0.0;
  /// -1/8 sum f Bcharge dV
  double charge_term = 0.0;
  /// 1/2 sum f |w x grad log f|^2 dV
  double quadratic_term = 0.0;
};

/// Entropy production of the pure diffusion equation for w, with centered
/// differences for grad f and the pointwise field charge.
EntropyProduction entropy_production_rate(const DensityGrid& f, const VectorField3& w);

struct ComparisonReport {
  double l1_distance = 0.0;
  double l2_distance = 0.0;
  /// max |f1 - f2| divided by the mean density of the box.
  double max_rel_deviation = 0.0;
  double pearson_correlation = 0.0;
  std::array<int, 3> shape{};
  std::string note;

  nlohmann::json to_json() const;
};

/// Compares two densities on the same box. Shapes that differ are block
/// averaged to their per-axis greatest common divisor. Inputs are
/// renormalized to unit mass first.
ComparisonReport compare(const DensityGrid& f1, const DensityGrid& f2);

/// Pearson correlation of two equally sized samples.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace helidiff
