#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "helidiff/operator.hpp"

namespace helidiff {

using ParamMap = std::map<std::string, double>;

/// Registered decomposition w = lambda * grad C of an integrable operator.
struct IntegrabilityWitness {
  ScalarField lambda;
  ScalarField casimir;
  std::function<Vec3(const Vec3&)> casimir_gradient;
};

/// A named operator from the built-in catalog with its known structure.
struct CatalogOperator {
  std::string name;
  std::variant<VectorField3, OperatorField> field;
  std::optional<IntegrabilityWitness> witness;
  /// Density g of a known invariant volume g dx^1...dx^n; empty when none is
  /// registered.
  ScalarField invariant_density;
  /// Points with |x| below this radius lie outside the operator's domain.
  double excluded_radius = 0.0;

  int dim() const;
  OperatorField as_operator() const;
  /// nullptr for operators without a 3D vector form.
  const VectorField3* vector_field() const { return std::get_if<VectorField3>(&field); }
};

/// Names accepted by catalog_operator().
const std::vector<std::string>& catalog_names();

/// Builds a catalog operator. Parameters:
///   landau_lifshitz: gamma (1), sigma (0.5), c (0.5)
///   symplectic:      m (1)
/// Throws ConfigError for unknown names or parameters.
CatalogOperator catalog_operator(std::string_view name, const ParamMap& params = {});

/// Names accepted by catalog_hamiltonian().
const std::vector<std::string>& hamiltonian_names();

/// Built-in energies. Parameters:
///   rigid_body: Ix (1), Iy (2), Iz (3)   (dim 3)
///   quadratic:  |x|^2 / 2                (any dim)
///   trig:       a (1): a * sum_i cos x_i (any dim)
/// "none" yields std::nullopt.
std::optional<Hamiltonian> catalog_hamiltonian(std::string_view name, const ParamMap& params = {}, int dim = 3);

/// Embeds H(x^1..x^n) into n+extra dimensions, ignoring the added coordinates.
Hamiltonian lift_hamiltonian(const Hamiltonian& h, int extra);

}  // namespace helidiff
