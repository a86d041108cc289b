#include "helidiff/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "helidiff/classification.hpp"
#include "helidiff/errors.hpp"
#include "helidiff/parallel.hpp"

namespace helidiff {
namespace {

constexpr double kBetaDenominatorFloor = 1e-12;

// Periodic neighbor offsets along one axis.
struct Axis {
  int n;
  double inv2h;
  int plus(int i) const { return i + 1 == n ? 0 : i + 1; }
  int minus(int i) const { return i == 0 ? n - 1 : i - 1; }
};

struct Stencil {
  std::array<Axis, 3> ax;
  const DensityGrid* g;

  explicit Stencil(const DensityGrid& grid) : g(&grid) {
    for (int a = 0; a < 3; ++a) ax[a] = {grid.shape[a], 0.5 / grid.spacing(a)};
  }
  // Neighbor indices (+e_a, -e_a) of cell (i, j, k).
  std::array<std::size_t, 6> neighbors(int i, int j, int k) const {
    return {g->index(ax[0].plus(i), j, k), g->index(ax[0].minus(i), j, k), g->index(i, ax[1].plus(j), k),
            g->index(i, ax[1].minus(j), k), g->index(i, j, ax[2].plus(k)), g->index(i, j, ax[2].minus(k))};
  }
};

// Runs body(i, j, k, idx) over all cells, parallel over x slabs.
template <class Body>
void for_cells(const DensityGrid& g, Body&& body) {
  const int ny = g.shape[1], nz = g.shape[2];
  parallel_for(static_cast<std::size_t>(g.shape[0]), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (int j = 0; j < ny; ++j) {
        for (int k = 0; k < nz; ++k) body(static_cast<int>(i), j, k, g.index(static_cast<int>(i), j, k));
      }
    }
  });
}

double sum_of(std::span<const double> v) { return pairwise_sum(v); }

}  // namespace

DensityGrid::DensityGrid(std::array<int, 3> shape_, double side_, Vec3 center_)
    : shape(shape_), center(center_), side(side_) {
  for (int n : shape) {
    if (n < 1) throw ConfigError("grid shape entries must be positive");
  }
  if (!(side > 0.0) || !std::isfinite(side)) throw ConfigError("grid side must be positive");
  values.assign(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2], 0.0);
}

DensityGrid DensityGrid::on_domain(std::array<int, 3> shape, const DomainSpec& domain) {
  if (domain.kind != DomainSpec::Kind::periodic_box) throw ConfigError("grid solver requires a periodic box");
  Vec3 c{};
  for (int a = 0; a < 3; ++a) c[a] = domain.lower(a) + 0.5 * domain.side;
  return DensityGrid(shape, domain.side, c);
}

Vec3 DensityGrid::cell_center(int i, int j, int k) const {
  return {lower(0) + (i + 0.5) * spacing(0), lower(1) + (j + 0.5) * spacing(1), lower(2) + (k + 0.5) * spacing(2)};
}

Vec3 DensityGrid::cell_center(std::size_t idx) const {
  const int k = static_cast<int>(idx % shape[2]);
  const int j = static_cast<int>((idx / shape[2]) % shape[1]);
  const int i = static_cast<int>(idx / (static_cast<std::size_t>(shape[1]) * shape[2]));
  return cell_center(i, j, k);
}

double DensityGrid::mass() const { return sum_of(values) * cell_volume(); }

void DensityGrid::normalize() {
  const double m = mass();
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("density has no positive finite mass");
  for (double& v : values) v /= m;
}

void DensityGrid::fill(const ScalarField& f) {
  for_cells(*this, [&](int i, int j, int k, std::size_t idx) {
    const Vec3 x = cell_center(i, j, k);
    values[idx] = f(as_span(x));
  });
}

bool DensityGrid::same_layout(const DensityGrid& o) const {
  return shape == o.shape && side == o.side && center == o.center;
}

double apply_profile(EquilibriumSpec::Profile p, double c) {
  switch (p) {
    case EquilibriumSpec::Profile::identity: return c;
    case EquilibriumSpec::Profile::sin: return std::sin(c);
    case EquilibriumSpec::Profile::cos: return std::cos(c);
    case EquilibriumSpec::Profile::zero: return 0.0;
  }
  return 0.0;
}

EquilibriumSpec::Profile profile_from_string(const std::string& name) {
  if (name == "identity") return EquilibriumSpec::Profile::identity;
  if (name == "sin") return EquilibriumSpec::Profile::sin;
  if (name == "cos") return EquilibriumSpec::Profile::cos;
  if (name == "zero") return EquilibriumSpec::Profile::zero;
  throw ConfigError("unknown profile '" + name + "' (valid: identity, sin, cos, zero)");
}

DensityGrid make_equilibrium(const EquilibriumSpec& spec, const DensityGrid& layout) {
  using K = EquilibriumSpec::Kind;
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("equilibrium: missing ") + what);
  };
  switch (spec.kind) {
    case K::flat: break;
    case K::casimir_foliation: need(spec.lambda && spec.casimir, "lambda or casimir"); break;
    case K::zeta_potential: need(spec.w_norm && spec.zeta, "w_norm or zeta"); break;
    case K::boltzmann: need(spec.H0.has_value(), "hamiltonian"); break;
    case K::casimir_boltzmann: need(spec.H0 && spec.casimir, "hamiltonian or casimir"); break;
  }

  DensityGrid g = layout;
  // Log-density first so that large exponents do not overflow.
  for_cells(g, [&](int i, int j, int k, std::size_t idx) {
    const Vec3 c = g.cell_center(i, j, k);
    const auto x = as_span(c);
    double lf = 0.0;
    switch (spec.kind) {
      case K::flat: break;
      case K::casimir_foliation:
        lf = -spec.gamma * apply_profile(spec.profile, spec.casimir(x)) - std::log(spec.lambda(x));
        break;
      case K::zeta_potential: lf = -spec.zeta(x) - std::log(spec.w_norm(x)); break;
      case K::boltzmann: lf = -spec.beta * (*spec.H0)(x); break;
      case K::casimir_boltzmann:
        lf = -spec.beta * (*spec.H0)(x) - spec.gamma * apply_profile(spec.profile, spec.casimir(x));
        break;
    }
    g.values[idx] = lf;
  });
  const double top = *std::max_element(g.values.begin(), g.values.end());
  if (!std::isfinite(top)) throw NumericalError("equilibrium: non-finite log-density");
  for (double& v : g.values) v = std::exp(v - top);
  g.normalize();
  return g;
}

FokkerPlanckOperator::FokkerPlanckOperator(const Dynamics& dyn, const DensityGrid& layout) : layout_(layout) {
  if (dyn.dim() != 3) throw ConfigError("grid solver requires a 3D operator");
  dyn.validate();
  layout_.values.clear();
  const std::size_t n = static_cast<std::size_t>(layout.shape[0]) * layout.shape[1] * layout.shape[2];
  V_.assign(9 * n, 0.0);
  u0_.assign(3 * n, 0.0);
  u1_.assign(3 * n, 0.0);
  if (dyn.H0) {
    h0_.assign(n, 0.0);
    vg_.assign(3 * n, 0.0);
  }
  for_cells(layout, [&](int i, int j, int k, std::size_t idx) {
    const Vec3 x = layout.cell_center(i, j, k);
    std::span<double> V(V_.data() + 9 * idx, 9), u0(u0_.data() + 3 * idx, 3);
    sde_coefficients(dyn, 0.0, as_span(x), u0, V);
    if (!dyn.H0) return;
    h0_[idx] = (*dyn.H0)(as_span(x));
    std::array<double, 3> g{};
    dyn.H0->gradient(as_span(x), g);
    for (int kk = 0; kk < 3; ++kk) {
      double s = 0.0;
      for (int r = 0; r < 3; ++r) s += V[r * 3 + kk] * g[r];
      vg_[3 * idx + kk] = s;
    }
    for (int r = 0; r < 3; ++r) {
      double s = 0.0;
      for (int kk = 0; kk < 3; ++kk) s += V[r * 3 + kk] * vg_[3 * idx + kk];
      u1_[3 * idx + r] = s;
    }
  });
}

void FokkerPlanckOperator::rhs(std::span<const double> f, double beta, std::span<double> out) const {
  const DensityGrid& g = layout_;
  const std::size_t n = V_.size() / 9;
  require(f.size() == n && out.size() == n, "FokkerPlanckOperator::rhs: size mismatch");
  const Stencil st(g);
  std::vector<double> D(3 * n), F(3 * n);

  // D_k = sum_j d_j (V_jk f)
  for_cells(g, [&](int i, int j, int k, std::size_t c) {
    const auto nb = st.neighbors(i, j, k);
    for (int kk = 0; kk < 3; ++kk) {
      double s = 0.0;
      for (int a = 0; a < 3; ++a) {
        const std::size_t p = nb[2 * a], m = nb[2 * a + 1];
        s += (V_[9 * p + 3 * a + kk] * f[p] - V_[9 * m + 3 * a + kk] * f[m]) * st.ax[a].inv2h;
      }
      D[3 * c + kk] = s;
    }
  });
  // flux_i = -(u0 - beta/2 u1)_i f + 1/2 V_ik D_k
  for_cells(g, [&](int, int, int, std::size_t c) {
    for (int a = 0; a < 3; ++a) {
      const double drift = u0_[3 * c + a] - 0.5 * beta * u1_[3 * c + a];
      double s = 0.0;
      for (int kk = 0; kk < 3; ++kk) s += V_[9 * c + 3 * a + kk] * D[3 * c + kk];
      F[3 * c + a] = -drift * f[c] + 0.5 * s;
    }
  });
  for_cells(g, [&](int i, int j, int k, std::size_t c) {
    const auto nb = st.neighbors(i, j, k);
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += (F[3 * nb[2 * a] + a] - F[3 * nb[2 * a + 1] + a]) * st.ax[a].inv2h;
    out[c] = s;
  });
}

std::vector<double> FokkerPlanckOperator::rhs(std::span<const double> f, double beta) const {
  std::vector<double> out(f.size());
  rhs(f, beta, out);
  return out;
}

double FokkerPlanckOperator::compute_beta(std::span<const double> f) const {
  if (h0_.empty()) throw ConfigError("compute_beta requires a hamiltonian");
  const DensityGrid& g = layout_;
  const std::size_t n = h0_.size();
  require(f.size() == n, "compute_beta: size mismatch");
  const Stencil st(g);
  std::vector<double> num(n), den(n);
  for_cells(g, [&](int i, int j, int k, std::size_t c) {
    const auto nb = st.neighbors(i, j, k);
    std::array<double, 3> df{};
    for (int a = 0; a < 3; ++a) df[a] = (f[nb[2 * a]] - f[nb[2 * a + 1]]) * st.ax[a].inv2h;
    double s = 0.0, q = 0.0;
    for (int kk = 0; kk < 3; ++kk) {
      double vf = 0.0;
      for (int a = 0; a < 3; ++a) vf += V_[9 * c + 3 * a + kk] * df[a];
      s += vg_[3 * c + kk] * vf;
      q += vg_[3 * c + kk] * vg_[3 * c + kk];
    }
    num[c] = s;
    den[c] = f[c] * q;
  });
  const double dv = g.cell_volume();
  const double d = sum_of(den) * dv;
  if (!(d >= kBetaDenominatorFloor)) {
    throw NumericalError("beta is undefined: the noise does not couple to grad H0");
  }
  return -sum_of(num) * dv / d;
}

double FokkerPlanckOperator::energy(std::span<const double> f) const {
  if (h0_.empty()) throw ConfigError("energy requires a hamiltonian");
  std::vector<double> e(f.size());
  for (std::size_t c = 0; c < f.size(); ++c) e[c] = f[c] * h0_[c];
  return sum_of(e) * layout_.cell_volume();
}

double FokkerPlanckOperator::energy_consistent_beta(std::span<const double> f) const {
  if (h0_.empty()) throw ConfigError("energy_consistent_beta requires a hamiltonian");
  // RHS is affine in beta: dE/dt = A + beta B.
  const auto r0 = rhs(f, 0.0);
  const auto r1 = rhs(f, 1.0);
  const double a = energy(r0);
  const double b = energy(r1) - a;
  if (!(std::abs(b) >= kBetaDenominatorFloor)) {
    throw NumericalError("beta is undefined: friction does not change the energy");
  }
  return -a / b;
}

double FokkerPlanckOperator::beta_for(BetaMode mode, double fixed, std::span<const double> f) const {
  switch (mode) {
    case BetaMode::fixed: return fixed;
    case BetaMode::quadrature: return compute_beta(f);
    case BetaMode::energy_consistent: return energy_consistent_beta(f);
  }
  return fixed;
}

double FokkerPlanckOperator::heuristic_dt(double beta) const {
  const std::size_t n = V_.size() / 9;
  double h = layout_.side;
  for (int a = 0; a < 3; ++a) {
    if (layout_.shape[a] > 1) h = std::min(h, layout_.spacing(a));
  }
  double vmax = 0.0, umax = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double v2 = 0.0, u2 = 0.0;
    for (int q = 0; q < 9; ++q) v2 += V_[9 * c + q] * V_[9 * c + q];
    for (int a = 0; a < 3; ++a) {
      const double d = u0_[3 * c + a] - 0.5 * beta * u1_[3 * c + a];
      u2 += d * d;
    }
    vmax = std::max(vmax, 0.5 * v2);
    umax = std::max(umax, std::sqrt(u2));
  }
  double dt = std::numeric_limits<double>::infinity();
  if (vmax > 0.0) dt = 0.2 * h * h / vmax;
  if (umax > 0.0) dt = std::min(dt, 0.5 * h / umax);
  if (!std::isfinite(dt)) dt = 1.0;
  return dt;
}

double FokkerPlanckOperator::spectral_radius(double beta, int iterations) const {
  const std::size_t n = V_.size() / 9;
  std::vector<double> v(n), w(n);
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : v) x = u(gen);
  auto nrm = [](const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
  };
  double rho = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nv = nrm(v);
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    rhs(v, beta, w);
    rho = nrm(w);
    std::swap(v, w);
  }
  return rho;
}

double FokkerPlanckOperator::stable_dt(double beta) const {
  double dt = heuristic_dt(beta);
  const double rho = spectral_radius(beta);
  if (rho * dt > 2.0) dt = 1.9 / rho;
  return dt;
}

std::vector<double> fp_rhs_expanded(const DensityGrid& f, const VectorField3& w) {
  const std::size_t n = f.size();
  const Stencil st(f);
  std::vector<double> M(9 * n), bvec(3 * n), charge(n), q(3 * n), out(n);
  for_cells(f, [&](int i, int j, int k, std::size_t c) {
    const Vec3 x = f.cell_center(i, j, k);
    const Vec3 wx = w(x);
    const double w2 = dot(wx, wx);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) M[9 * c + 3 * a + b] = (a == b ? w2 : 0.0) - wx[a] * wx[b];
    }
    const Vec3 b = field_force(w, x);
    for (int a = 0; a < 3; ++a) bvec[3 * c + a] = b[a];
    charge[c] = field_charge_3d(w, x);
  });
  const auto& fv = f.values;
  for_cells(f, [&](int i, int j, int k, std::size_t c) {
    const auto nb = st.neighbors(i, j, k);
    std::array<double, 3> df{};
    for (int a = 0; a < 3; ++a) df[a] = (fv[nb[2 * a]] - fv[nb[2 * a + 1]]) * st.ax[a].inv2h;
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int b = 0; b < 3; ++b) s += M[9 * c + 3 * a + b] * df[b];
      q[3 * c + a] = s;
    }
    double drift = 0.0;
    for (int a = 0; a < 3; ++a) drift += bvec[3 * c + a] * df[a];
    out[c] = drift + 0.25 * fv[c] * charge[c];
  });
  for_cells(f, [&](int i, int j, int k, std::size_t c) {
    const auto nb = st.neighbors(i, j, k);
    double lap = 0.0;
    for (int a = 0; a < 3; ++a) lap += (q[3 * nb[2 * a] + a] - q[3 * nb[2 * a + 1] + a]) * st.ax[a].inv2h;
    out[c] = 0.5 * (lap + out[c]);
  });
  return out;
}

double fp_rhs_pointwise(const OperatorField& J, const ScalarField& f, std::span<const double> x, double h) {
  const int n = J.dim();
  require(static_cast<int>(x.size()) == n, "fp_rhs_pointwise: dimension mismatch");
  // G_k(y) = sum_j d_j (J^jk f)(y)
  auto G = [&](std::span<const double> y) {
    Vector g = Vector::Zero(n);
    std::vector<double> p(y.begin(), y.end());
    for (int j = 0; j < n; ++j) {
      p[j] = y[j] + h;
      const Matrix Jp = J.eval(p);
      const double fp = f(p);
      p[j] = y[j] - h;
      const Matrix Jm = J.eval(p);
      const double fm = f(p);
      p[j] = y[j];
      for (int k = 0; k < n; ++k) g[k] += (Jp(j, k) * fp - Jm(j, k) * fm) / (2.0 * h);
    }
    return g;
  };
  // flux_i(y) = 1/2 J^ik(y) G_k(y)
  auto flux = [&](std::span<const double> y, int i) { return 0.5 * J.eval(y).row(i).dot(G(y)); };
  std::vector<double> p(x.begin(), x.end());
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    p[i] = x[i] + h;
    const double fp = flux(p, i);
    p[i] = x[i] - h;
    const double fm = flux(p, i);
    p[i] = x[i];
    s += (fp - fm) / (2.0 * h);
  }
  return s;
}

double fp_step(DensityGrid& f, const FokkerPlanckOperator& op, double dt, BetaMode mode, double fixed_beta,
               ClipBudget& budget) {
  require(f.same_layout(op.layout()), "fp_step: grid layout does not match the operator");
  const std::size_t n = f.size();
  const double m0 = f.mass();
  const double b1 = op.beta_for(mode, fixed_beta, f.values);
  const auto k1 = op.rhs(f.values, b1);
  std::vector<double> tmp(n);
  for (std::size_t c = 0; c < n; ++c) tmp[c] = f.values[c] + dt * k1[c];
  const double b2 = op.beta_for(mode, fixed_beta, tmp);
  const auto k2 = op.rhs(tmp, b2);
  for (std::size_t c = 0; c < n; ++c) f.values[c] += 0.5 * dt * (k1[c] + k2[c]);
  f.time += dt;

  std::vector<double> neg(n, 0.0);
  std::size_t cells = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (f.values[c] < 0.0) {
      neg[c] = -f.values[c];
      f.values[c] = 0.0;
      ++cells;
    }
  }
  if (cells > 0) {
    const double clipped = sum_of(neg) * f.cell_volume();
    budget.clipped_mass += clipped;
    budget.clipped_cells += cells;
    ++budget.events;
    if (budget.clipped_mass > budget.limit) {
      throw NumericalError("clipped mass " + std::to_string(budget.clipped_mass) + " exceeds budget " +
                           std::to_string(budget.limit) + "; refine the grid or reduce dt");
    }
    const double m1 = f.mass();
    if (m1 > 0.0) {
      for (double& v : f.values) v *= m0 / m1;
    }
  }
  return b2;
}

double stationary_residual(const DensityGrid& f, const FokkerPlanckOperator& op, double beta) {
  require(f.same_layout(op.layout()), "stationary_residual: grid layout does not match the operator");
  auto r = op.rhs(f.values, beta);
  for (double& v : r) v = std::abs(v);
  return sum_of(r) * f.cell_volume();
}

}  // namespace helidiff
