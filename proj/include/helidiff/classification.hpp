#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "helidiff/operator.hpp"

namespace helidiff {

/// Density g of the volume form g dx^1 ... dx^n.
struct VolumeWeight {
  ScalarField g;
  std::string name = "1";

  static VolumeWeight unit();
  static VolumeWeight from(ScalarField g, std::string name);

  bool is_unit() const { return !g; }
  double operator()(std::span<const double> x) const;
  /// Central-difference gradient (zero for the unit weight).
  Vector gradient(std::span<const double> x) const;
};

// 3D vector-form diagnostics.
double helicity_density(const VectorField3& w, const Vec3& x);
/// b = w x curl w, or the normalized b-hat = w-hat x curl w-hat.
Vec3 field_force(const VectorField3& w, const Vec3& x, bool normalized = false);
/// 4 div(w x curl w), outer divergence by central differences (kSecondDerivStep).
double field_charge_3d(const VectorField3& w, const Vec3& x);
/// |curl w - (b x w + h w) / w^2|.
double curl_decomposition_residual(const VectorField3& w, const Vec3& x);

// n-dimensional tensor diagnostics.
/// max over i<j<k of |J^{im} d_m J^{jk} + J^{jm} d_m J^{ki} + J^{km} d_m J^{ij}|.
double jacobi_residual(const OperatorField& J, std::span<const double> x);
/// c_j = d_i (g J^{ij}).
Vector cocurrent(const OperatorField& J, const VolumeWeight& g, std::span<const double> x);
/// b^i = g J^{ij} d_l (g J^{lj}).
Vector field_force_nd(const OperatorField& J, const VolumeWeight& g, std::span<const double> x);
/// 4 d_i b^i, outer divergence by central differences (kSecondDerivStep).
double field_charge_nd(const OperatorField& J, const VolumeWeight& g, std::span<const double> x);
/// A_k = omega^{km} d_l J^{lm} with omega = J^{-1}.
Vector closure_potential(const OperatorField& J, std::span<const double> x);
/// max over (k, n) of |d_n A_k - d_k A_n|. Throws NotApplicable for odd n or
/// |det J| < 1e-10.
double closure_test(const OperatorField& J, std::span<const double> x);
/// (n+1)-dimensional operator with extra column X^{j,n+1} = x^{n+1} d_i J^{ij}.
OperatorField extend_to_measure_preserving(const OperatorField& J);

enum class OperatorClass { symplectic, poisson, measure_preserving, strong_beltrami, beltrami, general_antisymmetric };

std::string to_string(OperatorClass c);

struct SampleStats {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  double rms = 0.0;

  static SampleStats of(std::span<const double> values);
};

struct SampleSpec {
  int n_samples = 256;
  /// Box [lower, upper]; empty means [0, 2 pi]^n.
  std::vector<double> lower;
  std::vector<double> upper;
  std::uint64_t seed = 0;
  /// Points with |x| below this radius are skipped.
  double excluded_radius = 0.0;
};

/// Scrambled Sobol points in the box of `spec` (Cranley-Patterson shift
/// derived from the seed).
std::vector<std::vector<double>> sample_points(int dim, const SampleSpec& spec);

struct ClassificationReport {
  std::string operator_name;
  std::string g_name;
  int dim = 0;
  std::vector<std::vector<double>> samples;
  std::optional<SampleStats> h_stats;  // 3D only
  SampleStats b_norm_stats;
  SampleStats charge_stats;
  SampleStats jacobi_residual_stats;
  SampleStats cocurrent_residual_stats;
  bool analytic_derivatives = false;
  double tolerance = 0.0;
  OperatorClass label = OperatorClass::general_antisymmetric;

  nlohmann::json to_json() const;
};

/// Tolerance 1e-6 with analytic first derivatives, 1e-3 otherwise, unless
/// `tolerance` is given.
ClassificationReport classify(const OperatorField& J, const VolumeWeight& g, const SampleSpec& spec,
                              std::string operator_name = "custom", std::optional<double> tolerance = {});

}  // namespace helidiff
