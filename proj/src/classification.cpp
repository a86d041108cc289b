#include "helidiff/classification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/random/sobol.hpp>

#include "helidiff/errors.hpp"
#include "helidiff/parallel.hpp"

namespace helidiff {
namespace {

constexpr double kMinNorm = 1e-12;
constexpr double kMinDet = 1e-10;

template <class F>
Vector five_point(F&& f, std::span<const double> x, int m, double h) {
  std::vector<double> xp(x.begin(), x.end());
  const double x0 = xp[m];
  xp[m] = x0 + 2 * h;
  const Vector p2 = f(xp);
  xp[m] = x0 + h;
  const Vector p1 = f(xp);
  xp[m] = x0 - h;
  const Vector m1 = f(xp);
  xp[m] = x0 - 2 * h;
  const Vector m2 = f(xp);
  return (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
}

}  // namespace

VolumeWeight VolumeWeight::unit() { return {}; }

VolumeWeight VolumeWeight::from(ScalarField g, std::string name) { return {std::move(g), std::move(name)}; }

double VolumeWeight::operator()(std::span<const double> x) const {
  if (!g) return 1.0;
  const double v = g(x);
  if (!(std::abs(v) >= kMinNorm)) throw ContractViolation("VolumeWeight: |g| below 1e-12 at a sampled point");
  return v;
}

Vector VolumeWeight::gradient(std::span<const double> x) const {
  if (!g) return Vector::Zero(static_cast<Eigen::Index>(x.size()));
  return fd_gradient(g, x, kFirstDerivStep);
}

double helicity_density(const VectorField3& w, const Vec3& x) { return dot(w(x), w.curl(x)); }

Vec3 field_force(const VectorField3& w, const Vec3& x, bool normalized) {
  const Vec3 v = w(x);
  if (!normalized) return cross(v, w.curl(x));
  const double n = norm(v);
  if (!(n >= kMinNorm)) throw NotApplicable("field_force: |w| below 1e-12, normalized force undefined");
  // curl(w/|w|) = curl w / |w| + grad(1/|w|) x w, with grad|w| = (Dw)^T w / |w|.
  const Mat3 d = w.jacobian(x);
  Vec3 grad_n{};
  for (int j = 0; j < 3; ++j) grad_n[j] = (d[0][j] * v[0] + d[1][j] * v[1] + d[2][j] * v[2]) / n;
  const Vec3 u = (1.0 / n) * v;
  const Vec3 curl_u = (1.0 / n) * w.curl(x) + cross((-1.0 / (n * n)) * grad_n, v);
  return cross(u, curl_u);
}

double field_charge_3d(const VectorField3& w, const Vec3& x) {
  const double h = kSecondDerivStep;
  double div = 0.0;
  for (int j = 0; j < 3; ++j) {
    Vec3 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    div += (field_force(w, xp)[j] - field_force(w, xm)[j]) / (2.0 * h);
  }
  return 4.0 * div;
}

double curl_decomposition_residual(const VectorField3& w, const Vec3& x) {
  const Vec3 v = w(x);
  const double w2 = dot(v, v);
  if (!(std::sqrt(w2) >= kMinNorm)) throw NotApplicable("curl_decomposition_residual: |w| below 1e-12");
  const Vec3 c = w.curl(x);
  const Vec3 b = cross(v, c);
  const double h = dot(v, c);
  return norm(c - (1.0 / w2) * (cross(b, v) + h * v));
}

double jacobi_residual(const OperatorField& J, std::span<const double> x) {
  const int n = J.dim();
  if (n < 3) return 0.0;
  const Matrix m = J.eval(x);
  const auto d = J.deriv_all(x);
  // t(i, j, k) = J^{im} d_m J^{jk}
  auto t = [&](int i, int j, int k) {
    double s = 0.0;
    for (int q = 0; q < n; ++q) s += m(i, q) * d[q](j, k);
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) worst = std::max(worst, std::abs(t(i, j, k) + t(j, k, i) + t(k, i, j)));
    }
  }
  return worst;
}

Vector cocurrent(const OperatorField& J, const VolumeWeight& g, std::span<const double> x) {
  const int n = J.dim();
  require(static_cast<int>(x.size()) == n, "cocurrent: point dimension mismatch");
  Vector c = J.column_divergence(x);
  if (g.is_unit()) return c;
  const double gv = g(x);
  const Vector dg = g.gradient(x);
  const Matrix m = J.eval(x);
  c *= gv;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) c[j] += dg[i] * m(i, j);
  }
  return c;
}

Vector field_force_nd(const OperatorField& J, const VolumeWeight& g, std::span<const double> x) {
  const Vector c = cocurrent(J, g, x);
  return g(x) * (J.eval(x) * c);
}

double field_charge_nd(const OperatorField& J, const VolumeWeight& g, std::span<const double> x) {
  const double h = kSecondDerivStep;
  std::vector<double> xp(x.begin(), x.end());
  double div = 0.0;
  for (int i = 0; i < J.dim(); ++i) {
    const double x0 = xp[i];
    xp[i] = x0 + h;
    const double bp = field_force_nd(J, g, xp)[i];
    xp[i] = x0 - h;
    const double bm = field_force_nd(J, g, xp)[i];
    xp[i] = x0;
    div += (bp - bm) / (2.0 * h);
  }
  return 4.0 * div;
}

Vector closure_potential(const OperatorField& J, std::span<const double> x) {
  const Matrix m = J.eval(x);
  return m.inverse() * J.column_divergence(x);
}

double closure_test(const OperatorField& J, std::span<const double> x) {
  const int n = J.dim();
  if (n % 2 != 0) throw NotApplicable("closure_test: operator dimension is odd");
  const Matrix m = J.eval(x);
  Eigen::FullPivLU<Matrix> lu(m);
  if (!(std::abs(lu.determinant()) >= kMinDet)) throw NotApplicable("closure_test: J is singular at the point");
  const Matrix omega = lu.inverse();
  const Vector a = J.column_divergence(x);
  const auto dj = J.deriv_all(x);
  // E_kn = d_n(omega a)_k - d_k(omega a)_n with d_n omega = -omega (d_n J) omega.
  Matrix grad_a(n, n);  // column q holds d_q a
  for (int q = 0; q < n; ++q) {
    grad_a.col(q) = five_point([&](std::span<const double> y) { return J.column_divergence(y); }, x, q,
                               kSecondDerivStep);
  }
  Matrix dA(n, n);  // dA(k, q) = d_q A_k
  for (int q = 0; q < n; ++q) dA.col(q) = -omega * dj[q] * omega * a + omega * grad_a.col(q);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int q = k + 1; q < n; ++q) worst = std::max(worst, std::abs(dA(k, q) - dA(q, k)));
  }
  return worst;
}

OperatorField extend_to_measure_preserving(const OperatorField& J) {
  const int n = J.dim();
  const OperatorField layout(n + 1, [](std::span<const double>, std::span<double>) {});
  std::vector<std::size_t> inner, outer;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) inner.push_back(layout.pair_index(i, j));
    outer.push_back(layout.pair_index(i, n));
  }
  const std::size_t pairs_in = J.pair_count();
  const std::size_t pairs_out = layout.pair_count();

  auto eval = [J, n, inner, outer, pairs_in](std::span<const double> x, std::span<double> upper) {
    const auto xs = x.first(n);
    std::vector<double> u(pairs_in);
    J.eval_upper(xs, u);
    for (std::size_t p = 0; p < pairs_in; ++p) upper[inner[p]] = u[p];
    const Vector a = J.column_divergence(xs);
    for (int j = 0; j < n; ++j) upper[outer[j]] = x[n] * a[j];
  };
  auto deriv = [J, n, inner, outer, pairs_in, pairs_out](std::span<const double> x, std::span<double> d) {
    const auto xs = x.first(n);
    std::vector<double> dj(pairs_in * n);
    J.deriv_upper(xs, dj);
    std::fill(d.begin(), d.end(), 0.0);
    for (int m = 0; m < n; ++m) {
      for (std::size_t p = 0; p < pairs_in; ++p) d[m * pairs_out + inner[p]] = dj[m * pairs_in + p];
      const Vector da =
          five_point([&](std::span<const double> y) { return J.column_divergence(y); }, xs, m, kSecondDerivStep);
      for (int j = 0; j < n; ++j) d[m * pairs_out + outer[j]] = x[n] * da[j];
    }
    const Vector a = J.column_divergence(xs);
    for (int j = 0; j < n; ++j) d[n * pairs_out + outer[j]] = a[j];
  };
  return OperatorField(n + 1, std::move(eval), std::move(deriv), J.fd_step());
}

std::string to_string(OperatorClass c) {
  switch (c) {
    case OperatorClass::symplectic: return "symplectic";
    case OperatorClass::poisson: return "poisson";
    case OperatorClass::measure_preserving: return "measure_preserving";
    case OperatorClass::strong_beltrami: return "strong_beltrami";
    case OperatorClass::beltrami: return "beltrami";
    case OperatorClass::general_antisymmetric: return "general_antisymmetric";
  }
  return "general_antisymmetric";
}

SampleStats SampleStats::of(std::span<const double> values) {
  SampleStats s;
  if (values.empty()) return s;
  std::vector<double> abs_v(values.size()), sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    abs_v[i] = std::abs(values[i]);
    sq[i] = values[i] * values[i];
    s.max_abs = std::max(s.max_abs, abs_v[i]);
  }
  const auto count = static_cast<double>(values.size());
  s.mean_abs = pairwise_sum(abs_v) / count;
  s.rms = std::sqrt(pairwise_sum(sq) / count);
  return s;
}

std::vector<std::vector<double>> sample_points(int dim, const SampleSpec& spec) {
  require(dim >= 1, "sample_points: dimension must be positive");
  require(spec.n_samples >= 1, "sample_points: n_samples must be positive");
  std::vector<double> lo = spec.lower, hi = spec.upper;
  if (lo.empty()) lo.assign(dim, 0.0);
  if (hi.empty()) hi.assign(dim, 2.0 * std::numbers::pi);
  require(static_cast<int>(lo.size()) == dim && static_cast<int>(hi.size()) == dim,
          "sample_points: box dimension mismatch");

  std::mt19937_64 shift_rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = unit(shift_rng);

  boost::random::sobol_engine<std::uint32_t, 32, boost::random::default_sobol_table> gen(dim);
  constexpr double kScale = 1.0 / 4294967296.0;
  std::vector<std::vector<double>> pts;
  pts.reserve(spec.n_samples);
  const long max_draws = 64L * spec.n_samples + 1024;
  for (long draw = 0; draw < max_draws && static_cast<int>(pts.size()) < spec.n_samples; ++draw) {
    std::vector<double> p(dim);
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      double u = static_cast<double>(gen()) * kScale + shift[k];
      u -= std::floor(u);
      p[k] = lo[k] + (hi[k] - lo[k]) * u;
      r2 += p[k] * p[k];
    }
    if (std::sqrt(r2) < spec.excluded_radius) continue;
    pts.push_back(std::move(p));
  }
  if (static_cast<int>(pts.size()) < spec.n_samples) {
    throw ConfigError("sample_points: sampling box lies almost entirely inside the excluded ball");
  }
  return pts;
}

nlohmann::json ClassificationReport::to_json() const {
  auto stats_json = [](const SampleStats& s) {
    return nlohmann::json{{"max_abs", s.max_abs}, {"mean_abs", s.mean_abs}, {"rms", s.rms}};
  };
  nlohmann::json stats{{"field_force_norm", stats_json(b_norm_stats)},
                       {"field_charge", stats_json(charge_stats)},
                       {"jacobi_residual", stats_json(jacobi_residual_stats)},
                       {"cocurrent_residual", stats_json(cocurrent_residual_stats)}};
  if (h_stats) stats["helicity"] = stats_json(*h_stats);
  return {{"operator", operator_name},
          {"g", g_name},
          {"dim", dim},
          {"label", to_string(label)},
          {"tolerance", tolerance},
          {"derivatives", analytic_derivatives ? "analytic" : "finite_difference"},
          {"n_samples", samples.size()},
          {"stats", stats}};
}

ClassificationReport classify(const OperatorField& J, const VolumeWeight& g, const SampleSpec& spec,
                              std::string operator_name, std::optional<double> tolerance) {
  if (spec.n_samples < 100) throw ConfigError("classify: at least 100 sample points are required");
  const int n = J.dim();
  ClassificationReport r;
  r.operator_name = std::move(operator_name);
  r.g_name = g.name;
  r.dim = n;
  r.analytic_derivatives = J.has_analytic_deriv();
  r.tolerance = tolerance.value_or(r.analytic_derivatives ? 1e-6 : 1e-3);
  r.samples = sample_points(n, spec);

  const std::size_t count = r.samples.size();
  std::vector<double> h(count), b(count), q(count), jac(count), coc(count), dmax(count), det(count);
  const std::optional<VectorField3> w3 = n == 3 ? std::optional(VectorField3::from_operator(J)) : std::nullopt;
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    std::vector<double> d(J.pair_count() * n);
    for (std::size_t s = begin; s < end; ++s) {
      const std::span<const double> x = r.samples[s];
      if (w3) h[s] = helicity_density(*w3, Vec3{x[0], x[1], x[2]});
      b[s] = field_force_nd(J, g, x).norm();
      q[s] = field_charge_nd(J, g, x);
      jac[s] = jacobi_residual(J, x);
      coc[s] = cocurrent(J, g, x).cwiseAbs().maxCoeff();
      J.deriv_upper(x, d);
      double m = 0.0;
      for (double v : d) m = std::max(m, std::abs(v));
      dmax[s] = m;
      det[s] = n % 2 == 0 ? std::abs(J.eval(x).determinant()) : 0.0;
    }
  });

  if (w3) r.h_stats = SampleStats::of(h);
  r.b_norm_stats = SampleStats::of(b);
  r.charge_stats = SampleStats::of(q);
  r.jacobi_residual_stats = SampleStats::of(jac);
  r.cocurrent_residual_stats = SampleStats::of(coc);

  const double tol = r.tolerance;
  const bool constant = *std::max_element(dmax.begin(), dmax.end()) <= tol;
  const bool invertible = n % 2 == 0 && *std::min_element(det.begin(), det.end()) >= kMinDet;
  if (r.jacobi_residual_stats.max_abs <= tol) {
    r.label = constant && invertible ? OperatorClass::symplectic : OperatorClass::poisson;
  } else if (r.cocurrent_residual_stats.max_abs <= tol) {
    r.label = OperatorClass::measure_preserving;
  } else if (r.b_norm_stats.max_abs <= tol) {
    r.label = OperatorClass::strong_beltrami;
  } else if (r.charge_stats.max_abs <= tol) {
    r.label = OperatorClass::beltrami;
  } else {
    r.label = OperatorClass::general_antisymmetric;
  }
  return r;
}

}  // namespace helidiff
