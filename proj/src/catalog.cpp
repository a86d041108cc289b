#include "helidiff/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "helidiff/errors.hpp"

namespace helidiff {
namespace {

std::string join(const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
  return os.str();
}

void check_params(std::string_view op, const ParamMap& params, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : params) {
    if (!allowed.count(key)) {
      throw ConfigError("operator '" + std::string(op) + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' is not finite");
  }
}

double param(const ParamMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}


CatalogOperator make_uniform_z() {
  VectorField3 w([](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; }, [](const Vec3&) { return Mat3{}; });
  IntegrabilityWitness wit{[](std::span<const double>) { return 1.0; },
                           [](std::span<const double> x) { return x[2]; },
                           [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; }};
  return {"uniform_z", w, wit, [](std::span<const double>) { return 1.0; }, 0.0};
}

double casimir_c(std::span<const double> x) { return x[2] - std::cos(x[0]) - std::cos(x[1]); }
Vec3 casimir_grad(const Vec3& x) { return {std::sin(x[0]), std::sin(x[1]), 1.0}; }

CatalogOperator make_grad_casimir() {
  VectorField3 w(casimir_grad, [](const Vec3& x) {
    Mat3 m{};
    m[0][0] = std::cos(x[0]);
    m[1][1] = std::cos(x[1]);
    return m;
  });
  IntegrabilityWitness wit{[](std::span<const double>) { return 1.0; }, casimir_c, casimir_grad};
  return {"grad_casimir", w, wit, [](std::span<const double>) { return 1.0; }, 0.0};
}

double lambda_x(double x) { return std::sqrt(1.0 + std::cos(x) * std::cos(x)); }

CatalogOperator make_lambda_grad_casimir() {
  VectorField3 w(
      [](const Vec3& x) {
        const double l = lambda_x(x[0]);
        return Vec3{l * std::sin(x[0]), l * std::sin(x[1]), l};
      },
      [](const Vec3& x) {
        const double l = lambda_x(x[0]);
        const double dl = -std::cos(x[0]) * std::sin(x[0]) / l;
        Mat3 m{};
        m[0][0] = dl * std::sin(x[0]) + l * std::cos(x[0]);
        m[1][0] = dl * std::sin(x[1]);
        m[1][1] = l * std::cos(x[1]);
        m[2][0] = dl;
        return m;
      });
  IntegrabilityWitness wit{[](std::span<const double> x) { return lambda_x(x[0]); }, casimir_c, casimir_grad};
  return {"lambda_grad_casimir", w, wit, [](std::span<const double> x) { return 1.0 / lambda_x(x[0]); }, 0.0};
}

CatalogOperator make_beltrami() {
  VectorField3 w(
      [](const Vec3& x) {
        const double c = std::cos(x[2]), s = std::sin(x[2]);
        return Vec3{c + s, c - s, 0.0};
      },
      [](const Vec3& x) {
        const double c = std::cos(x[2]), s = std::sin(x[2]);
        Mat3 m{};
        m[0][2] = c - s;
        m[1][2] = -s - c;
        return m;
      });
  return {"beltrami", w, std::nullopt, {}, 0.0};
}

CatalogOperator make_spiral() {
  VectorField3 w(
      [](const Vec3& x) {
        return Vec3{std::cos(x[2]) - std::sin(x[1]), -std::sin(x[2]), std::cos(x[1])};
      },
      [](const Vec3& x) {
        Mat3 m{};
        m[0][1] = -std::cos(x[1]);
        m[0][2] = -std::sin(x[2]);
        m[1][2] = -std::cos(x[2]);
        m[2][1] = -std::sin(x[1]);
        return m;
      });
  return {"spiral", w, std::nullopt, {}, 0.0};
}

CatalogOperator make_antisym() {
  VectorField3 w([](const Vec3& x) { return Vec3{1.0, std::sin(x[0]) + std::cos(x[1]), std::cos(x[0])}; },
                 [](const Vec3& x) {
                   Mat3 m{};
                   m[1][0] = std::cos(x[0]);
                   m[1][1] = -std::sin(x[1]);
                   m[2][0] = -std::sin(x[0]);
                   return m;
                 });
  return {"antisym", w, std::nullopt, {}, 0.0};
}

CatalogOperator make_unit_norm() {
  VectorField3 w(
      [](const Vec3& x) {
        const double s = lambda_x(x[0]);
        return Vec3{std::cos(x[1]) / s, std::cos(x[0]) / s, std::sin(x[1]) / s};
      },
      [](const Vec3& x) {
        const double s = lambda_x(x[0]);
        // d(1/s)/dx = cos x sin x / s^3
        const double q = std::cos(x[0]) * std::sin(x[0]) / (s * s * s);
        Mat3 m{};
        m[0][0] = std::cos(x[1]) * q;
        m[0][1] = -std::sin(x[1]) / s;
        m[1][0] = -std::sin(x[0]) / s + std::cos(x[0]) * q;
        m[2][0] = std::sin(x[1]) * q;
        m[2][1] = std::cos(x[1]) / s;
        return m;
      });
  return {"unit_norm", w, std::nullopt, {}, 0.0};
}

CatalogOperator make_landau_lifshitz(const ParamMap& params) {
  check_params("landau_lifshitz", params, {"gamma", "sigma", "c"});
  const double gamma = param(params, "gamma", 1.0);
  const double sigma = param(params, "sigma", 0.5);
  const double c = param(params, "c", 0.5);
  // w = gamma*Hf - sigma/|x|^2 * Hf x x with effective field Hf = (c, 0, z).
  VectorField3 w(
      [=](const Vec3& x) {
        const double u = 1.0 / dot(x, x);
        return Vec3{gamma * c + sigma * x[2] * x[1] * u, sigma * x[2] * (c - x[0]) * u,
                    gamma * x[2] - sigma * c * x[1] * u};
      },
      [=](const Vec3& x) {
        const double u = 1.0 / dot(x, x);
        const Vec3 du{-2.0 * x[0] * u * u, -2.0 * x[1] * u * u, -2.0 * x[2] * u * u};
        Mat3 m{};
        const double a = sigma * x[2] * x[1];
        m[0][0] = a * du[0];
        m[0][1] = sigma * x[2] * u + a * du[1];
        m[0][2] = sigma * x[1] * u + a * du[2];
        const double b = sigma * x[2] * (c - x[0]);
        m[1][0] = -sigma * x[2] * u + b * du[0];
        m[1][1] = b * du[1];
        m[1][2] = sigma * (c - x[0]) * u + b * du[2];
        const double e = -sigma * c * x[1];
        m[2][0] = e * du[0];
        m[2][1] = -sigma * c * u + e * du[1];
        m[2][2] = gamma + e * du[2];
        return m;
      });
  return {"landau_lifshitz", w, std::nullopt, {}, 1e-3};
}

CatalogOperator make_euler_rigid_body() {
  VectorField3 w([](const Vec3& x) { return x; },
                 [](const Vec3&) {
                   Mat3 m{};
                   m[0][0] = m[1][1] = m[2][2] = 1.0;
                   return m;
                 });
  IntegrabilityWitness wit{[](std::span<const double>) { return 1.0; },
                           [](std::span<const double> x) { return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); },
                           [](const Vec3& x) { return x; }};
  return {"euler_rigid_body", w, wit, [](std::span<const double>) { return 1.0; }, 0.0};
}

CatalogOperator make_symplectic(const ParamMap& params) {
  check_params("symplectic", params, {"m"});
  const double mv = param(params, "m", 1.0);
  if (mv < 1.0 || mv != std::floor(mv) || mv > 32.0) {
    throw ConfigError("symplectic: m must be an integer in [1, 32]");
  }
  const int m = static_cast<int>(mv);
  const int n = 2 * m;
  // J_c = sum_i d_{m+i} ^ d_i, i.e. J^{m+i,i} = 1 and J^{i,m+i} = -1.
  OperatorField probe(n, [](std::span<const double>, std::span<double>) {});
  std::vector<std::size_t> slots;
  for (int i = 0; i < m; ++i) slots.push_back(probe.pair_index(i, m + i));
  OperatorField op(
      n,
      [slots](std::span<const double>, std::span<double> upper) {
        std::fill(upper.begin(), upper.end(), 0.0);
        for (auto s : slots) upper[s] = -1.0;
      },
      [](std::span<const double>, std::span<double> d) { std::fill(d.begin(), d.end(), 0.0); });
  return {"symplectic", op, std::nullopt, [](std::span<const double>) { return 1.0; }, 0.0};
}

}  // namespace

int CatalogOperator::dim() const {
  if (const auto* w = std::get_if<VectorField3>(&field)) {
    (void)w;
    return 3;
  }
  return std::get<OperatorField>(field).dim();
}

OperatorField CatalogOperator::as_operator() const {
  if (const auto* w = std::get_if<VectorField3>(&field)) return w->to_operator();
  return std::get<OperatorField>(field);
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"uniform_z",  "grad_casimir",    "lambda_grad_casimir",
                                              "beltrami",   "spiral",          "antisym",
                                              "unit_norm",  "landau_lifshitz", "euler_rigid_body",
                                              "symplectic"};
  return names;
}

CatalogOperator catalog_operator(std::string_view name, const ParamMap& params) {
  if (name == "landau_lifshitz") return make_landau_lifshitz(params);
  if (name == "symplectic") return make_symplectic(params);
  const auto& names = catalog_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("unknown operator '" + std::string(name) + "'; valid names: " + join(names));
  }
  check_params(name, params, {});
  if (name == "uniform_z") return make_uniform_z();
  if (name == "grad_casimir") return make_grad_casimir();
  if (name == "lambda_grad_casimir") return make_lambda_grad_casimir();
  if (name == "beltrami") return make_beltrami();
  if (name == "spiral") return make_spiral();
  if (name == "antisym") return make_antisym();
  if (name == "unit_norm") return make_unit_norm();
  return make_euler_rigid_body();
}

const std::vector<std::string>& hamiltonian_names() {
  static const std::vector<std::string> names{"none", "rigid_body", "quadratic", "trig"};
  return names;
}

std::optional<Hamiltonian> catalog_hamiltonian(std::string_view name, const ParamMap& params, int dim) {
  if (name == "none") {
    check_params(name, params, {});
    return std::nullopt;
  }
  if (name == "rigid_body") {
    check_params(name, params, {"Ix", "Iy", "Iz"});
    if (dim != 3) throw ConfigError("rigid_body energy is three-dimensional");
    const Vec3 inv{1.0 / param(params, "Ix", 1.0), 1.0 / param(params, "Iy", 2.0), 1.0 / param(params, "Iz", 3.0)};
    for (double v : inv) {
      if (!std::isfinite(v) || v <= 0.0) throw ConfigError("rigid_body: moments of inertia must be positive");
    }
    return Hamiltonian(
        3,
        [inv](std::span<const double> x) {
          return 0.5 * (inv[0] * x[0] * x[0] + inv[1] * x[1] * x[1] + inv[2] * x[2] * x[2]);
        },
        [inv](std::span<const double> x, std::span<double> g) {
          for (int i = 0; i < 3; ++i) g[i] = inv[i] * x[i];
        });
  }
  if (name == "quadratic") {
    check_params(name, params, {});
    return Hamiltonian(
        dim,
        [](std::span<const double> x) {
          double s = 0.0;
          for (double v : x) s += v * v;
          return 0.5 * s;
        },
        [](std::span<const double> x, std::span<double> g) { std::copy(x.begin(), x.end(), g.begin()); });
  }
  if (name == "trig") {
    check_params(name, params, {"a"});
    const double a = param(params, "a", 1.0);
    return Hamiltonian(
        dim,
        [a](std::span<const double> x) {
          double s = 0.0;
          for (double v : x) s += std::cos(v);
          return a * s;
        },
        [a](std::span<const double> x, std::span<double> g) {
          for (std::size_t i = 0; i < x.size(); ++i) g[i] = -a * std::sin(x[i]);
        });
  }
  throw ConfigError("unknown hamiltonian '" + std::string(name) + "'; valid names: " + join(hamiltonian_names()));
}

Hamiltonian lift_hamiltonian(const Hamiltonian& h, int extra) {
  const int n = h.dim();
  return Hamiltonian(
      n + extra, [h, n](std::span<const double> x) { return h(x.first(n)); },
      [h, n](std::span<const double> x, std::span<double> g) {
        h.gradient(x.first(n), g.first(n));
        std::fill(g.begin() + n, g.end(), 0.0);
      });
}

}  // namespace helidiff
