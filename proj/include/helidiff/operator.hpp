#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "helidiff/linalg.hpp"

namespace helidiff {

/// Default central-difference step for first derivatives.
inline constexpr double kFirstDerivStep = 1e-4;
/// Step of the outer difference when a second derivative is built by
/// differencing first derivatives.
inline constexpr double kSecondDerivStep = 1e-3;

using ScalarField = std::function<double(std::span<const double>)>;

/// Antisymmetric tensor field J^{ij}(x) on R^n.
///
/// Only the strictly upper entries (i < j) are ever produced by the user
/// callbacks, in row-major pair order (0,1), (0,2), ..., (n-2,n-1). The full
/// matrix is assembled as J(j,i) = -J(i,j), so antisymmetry holds exactly.
class OperatorField {
 public:
  /// Fills `upper` (size pair_count()) with J^{ij}(x), i < j.
  using UpperEval = std::function<void(std::span<const double> x, std::span<double> upper)>;
  /// Fills `dupper` (size dim * pair_count()) with dJ^{ij}/dx^m at offset
  /// m * pair_count() + pair.
  using UpperDeriv = std::function<void(std::span<const double> x, std::span<double> dupper)>;

  OperatorField(int dim, UpperEval eval, UpperDeriv deriv = {}, double fd_step = kFirstDerivStep);

  int dim() const { return dim_; }
  std::size_t pair_count() const { return pairs_; }
  bool has_analytic_deriv() const { return static_cast<bool>(deriv_); }
  double fd_step() const { return fd_step_; }

  /// Index of (i, j), i < j, in the upper-entry layout.
  std::size_t pair_index(int i, int j) const;

  void eval_upper(std::span<const double> x, std::span<double> upper) const;
  void eval(std::span<const double> x, Matrix& out) const;
  Matrix eval(std::span<const double> x) const;

  /// All first derivatives of the upper entries, analytic when available,
  /// central differences with fd_step() otherwise.
  void deriv_upper(std::span<const double> x, std::span<double> dupper) const;
  /// dJ/dx^m as a full antisymmetric matrix.
  Matrix deriv(std::span<const double> x, int m) const;
  /// dJ/dx^m for every m.
  std::vector<Matrix> deriv_all(std::span<const double> x) const;

  /// Divergence of the columns: a_j = sum_i dJ^{ij}/dx^i.
  Vector column_divergence(std::span<const double> x) const;

 private:
  int dim_;
  std::size_t pairs_;
  UpperEval eval_;
  UpperDeriv deriv_;
  double fd_step_;
};

/// 3D operator stored as its vector form w, with J(theta) = w x theta.
class VectorField3 {
 public:
  using Eval = std::function<Vec3(const Vec3&)>;
  /// Returns m with m[i][j] = d w_i / d x_j.
  using Jacobian = std::function<Mat3(const Vec3&)>;

  explicit VectorField3(Eval eval, Jacobian jac = {}, double fd_step = kFirstDerivStep);

  Vec3 operator()(const Vec3& x) const { return eval_(x); }
  bool has_analytic_jacobian() const { return static_cast<bool>(jac_); }
  double fd_step() const { return fd_step_; }

  Mat3 jacobian(const Vec3& x) const;
  Vec3 curl(const Vec3& x) const;

  /// Component assignment J^{zy} = w_x, J^{xz} = w_y, J^{yx} = w_z.
  OperatorField to_operator() const;
  /// Inverse of to_operator(); requires dim 3.
  static VectorField3 from_operator(const OperatorField& op);

 private:
  Eval eval_;
  Jacobian jac_;
  double fd_step_;
};

/// Scalar energy H0 on R^n.
class Hamiltonian {
 public:
  using Eval = std::function<double(std::span<const double>)>;
  using Grad = std::function<void(std::span<const double>, std::span<double>)>;

  Hamiltonian(int dim, Eval eval, Grad grad = {}, double fd_step = kFirstDerivStep);

  int dim() const { return dim_; }
  bool has_analytic_grad() const { return static_cast<bool>(grad_); }
  double operator()(std::span<const double> x) const { return eval_(x); }
  void gradient(std::span<const double> x, std::span<double> out) const;
  Vector gradient(std::span<const double> x) const;

 private:
  int dim_;
  Eval eval_;
  Grad grad_;
  double fd_step_;
};

/// Jacobian R^k_r = dy^k/dx^r of the map to the coordinates in which noise
/// is applied. Stored row-major: R(k, r).
class CoordinateMap {
 public:
  using JacobianFn = std::function<void(std::span<const double>, Matrix&)>;

  static CoordinateMap identity(int dim);
  static CoordinateMap diagonal(std::vector<double> scales);
  static CoordinateMap general(int dim, JacobianFn fn);

  int dim() const { return dim_; }
  bool is_identity() const { return identity_; }
  void jacobian(std::span<const double> x, Matrix& out) const;
  Matrix jacobian(std::span<const double> x) const;

 private:
  CoordinateMap(int dim, bool identity, JacobianFn fn) : dim_(dim), identity_(identity), fn_(std::move(fn)) {}

  int dim_;
  bool identity_;
  JacobianFn fn_;
};

/// v^i = J^{ij}(x) theta_j.
Vector operator_apply(const OperatorField& op, std::span<const double> x, std::span<const double> theta);
/// Vector form: w(x) x theta.
Vec3 operator_apply(const VectorField3& w, const Vec3& x, const Vec3& theta);

/// Central-difference gradient of a scalar field.
Vector fd_gradient(const ScalarField& f, std::span<const double> x, double step);

}  // namespace helidiff
