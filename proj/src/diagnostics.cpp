#include "helidiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "helidiff/errors.hpp"
#include "helidiff/parallel.hpp"

namespace helidiff {
namespace {

constexpr std::size_t kDepositChunk = 1 << 16;

double positive_mod(double v, double m) {
  double r = std::fmod(v, m);
  if (r < 0.0) r += m;
  return r;
}

int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

void deposit_one(const DensityGrid& g, std::span<const double> x, DepositKind kind, std::vector<double>& out) {
  std::array<int, 3> i0{}, i1{};
  std::array<double, 3> w1{};
  for (int a = 0; a < 3; ++a) {
    const int n = g.shape[a];
    const double u = positive_mod(x[a] - g.lower(a), g.side) / g.spacing(a);
    if (kind == DepositKind::nearest || n == 1) {
      i0[a] = i1[a] = std::min(static_cast<int>(u), n - 1);
      w1[a] = 0.0;
      continue;
    }
    const double s = u - 0.5;
    const double fl = std::floor(s);
    i0[a] = wrap_index(static_cast<int>(fl), n);
    i1[a] = wrap_index(static_cast<int>(fl) + 1, n);
    w1[a] = s - fl;
  }
  for (int c = 0; c < 8; ++c) {
    const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
    const double w = (bx ? w1[0] : 1.0 - w1[0]) * (by ? w1[1] : 1.0 - w1[1]) * (bz ? w1[2] : 1.0 - w1[2]);
    if (w == 0.0) continue;
    out[g.index(bx ? i1[0] : i0[0], by ? i1[1] : i0[1], bz ? i1[2] : i0[2])] += w;
  }
}

std::vector<double> normalized_copy(const DensityGrid& f) {
  DensityGrid g = f;
  g.normalize();
  return std::move(g.values);
}

}  // namespace

DensityGrid deposit_histogram(const Ensemble& ens, const DensityGrid& layout, DepositKind kind) {
  if (ens.dim < 3) throw ConfigError("histogram deposit needs at least three coordinates");
  const std::size_t n = ens.size();
  const std::size_t chunks = (n + kDepositChunk - 1) / kDepositChunk;
  std::vector<std::vector<double>> partial(chunks);
  std::vector<std::size_t> counts(chunks, 0);
  parallel_for(chunks, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      partial[c].assign(layout.size(), 0.0);
      const std::size_t end = std::min(n, (c + 1) * kDepositChunk);
      for (std::size_t p = c * kDepositChunk; p < end; ++p) {
        if (ens.flagged[p]) continue;
        deposit_one(layout, ens.particle(p), kind, partial[c]);
        ++counts[c];
      }
    }
  });
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw ConfigError("cannot build a histogram from an empty ensemble");
  DensityGrid out = layout;
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (const auto& part : partial) {
    for (std::size_t i = 0; i < part.size(); ++i) out.values[i] += part[i];
  }
  const double scale = 1.0 / (static_cast<double>(total) * out.cell_volume());
  for (double& v : out.values) v *= scale;
  return out;
}

DensityGrid marginalize(const DensityGrid& f, std::array<bool, 3> keep) {
  std::array<int, 3> shape = f.shape;
  for (int a = 0; a < 3; ++a) {
    if (!keep[a]) shape[a] = 1;
  }
  return coarsen(f, shape);
}

DensityGrid coarsen(const DensityGrid& f, std::array<int, 3> shape) {
  std::array<int, 3> r{};
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < 1 || f.shape[a] % shape[a] != 0) {
      throw ConfigError(fmt::format("cannot coarsen extent {} to {}", f.shape[a], shape[a]));
    }
    r[a] = f.shape[a] / shape[a];
  }
  DensityGrid out(shape, f.side, f.center);
  out.time = f.time;
  const double inv = 1.0 / (static_cast<double>(r[0]) * r[1] * r[2]);
  for (int i = 0; i < f.shape[0]; ++i) {
    for (int j = 0; j < f.shape[1]; ++j) {
      for (int k = 0; k < f.shape[2]; ++k) {
        out.values[out.index(i / r[0], j / r[1], k / r[2])] += f.values[f.index(i, j, k)] * inv;
      }
    }
  }
  return out;
}

std::string to_string(EntropyKind k) {
  switch (k) {
    case EntropyKind::S: return "S";
    case EntropyKind::sigma_lambda: return "sigma_lambda";
    case EntropyKind::sigma_zeta: return "sigma_zeta";
    case EntropyKind::S_c: return "S_c";
    case EntropyKind::sigma: return "sigma";
  }
  return "?";
}

EntropyKind entropy_kind_from_string(const std::string& name) {
  for (auto k : {EntropyKind::S, EntropyKind::sigma_lambda, EntropyKind::sigma_zeta, EntropyKind::S_c,
                 EntropyKind::sigma}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown entropy kind '" + name + "' (valid: S, sigma_lambda, sigma_zeta, S_c, sigma)");
}

EntropyValue entropy(const DensityGrid& f, EntropyKind kind, const EntropyAux& aux) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("entropy: missing auxiliary field ") + what);
  };
  if (kind == EntropyKind::sigma_lambda) need(static_cast<bool>(aux.lambda), "lambda");
  if (kind == EntropyKind::sigma_zeta) need(aux.w_norm && aux.zeta, "w_norm/zeta");
  if (kind == EntropyKind::sigma) need(static_cast<bool>(aux.g), "g");

  std::vector<double> terms(f.size(), 0.0);
  std::size_t floored = 0;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const double v = f.values[c];
    if (v < kDensityFloor) {
      ++floored;
      continue;
    }
    double t = -v * std::log(v);
    if (kind != EntropyKind::S && kind != EntropyKind::S_c) {
      const Vec3 x = f.cell_center(c);
      const auto xs = as_span(x);
      switch (kind) {
        case EntropyKind::sigma_lambda: t -= v * std::log(aux.lambda(xs)); break;
        case EntropyKind::sigma_zeta: t -= v * (std::log(aux.w_norm(xs)) + aux.zeta(xs)); break;
        case EntropyKind::sigma: t += v * std::log(aux.g(xs)); break;
        default: break;
      }
    }
    terms[c] = t;
  }
  return {pairwise_sum(terms) * f.cell_volume(), floored};
}

void EntropyTrace::push(double t, double v) {
  if (!times.empty() && !(t > times.back())) throw ContractViolation("entropy trace times must increase");
  if (!std::isfinite(v)) throw NumericalError("non-finite entropy value at t = " + std::to_string(t));
  times.push_back(t);
  values.push_back(v);
}

std::string EntropyTrace::to_csv() const {
  std::ostringstream os;
  os << "t," << to_string(kind) << "\n";
  for (std::size_t i = 0; i < times.size(); ++i) os << fmt::format("{:.17g},{:.17g}\n", times[i], values[i]);
  return os.str();
}

EntropyProduction entropy_production_rate(const DensityGrid& f, const VectorField3& w) {
  const std::size_t n = f.size();
  std::vector<double> charge(n), quad(n);
  const std::array<double, 3> inv2h{0.5 / f.spacing(0), 0.5 / f.spacing(1), 0.5 / f.spacing(2)};
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      const double v = f.values[c];
      if (v < kDensityFloor) {
        charge[c] = quad[c] = 0.0;
        continue;
      }
      const int k = static_cast<int>(c % f.shape[2]);
      const int j = static_cast<int>((c / f.shape[2]) % f.shape[1]);
      const int i = static_cast<int>(c / (static_cast<std::size_t>(f.shape[1]) * f.shape[2]));
      const std::array<int, 3> idx{i, j, k};
      Vec3 grad{};
      for (int a = 0; a < 3; ++a) {
        auto p = idx, m = idx;
        p[a] = wrap_index(idx[a] + 1, f.shape[a]);
        m[a] = wrap_index(idx[a] - 1, f.shape[a]);
        grad[a] = (f.values[f.index(p[0], p[1], p[2])] - f.values[f.index(m[0], m[1], m[2])]) * inv2h[a];
      }
      const Vec3 x = f.cell_center(i, j, k);
      const Vec3 q = cross(w(x), grad);
      quad[c] = 0.5 * dot(q, q) / v;
      charge[c] = -0.125 * v * field_charge_3d(w, x);
    }
  });
  EntropyProduction out;
  out.charge_term = pairwise_sum(charge) * f.cell_volume();
  out.quadratic_term = pairwise_sum(quad) * f.cell_volume();
  out.total = out.charge_term + out.quadratic_term;
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), "pearson: sizes must match and be nonzero");
  const double n = static_cast<double>(a.size());
  const double ma = pairwise_sum(a) / n, mb = pairwise_sum(b) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 && sbb == 0.0) return 1.0;
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

ComparisonReport compare(const DensityGrid& f1, const DensityGrid& f2) {
  if (f1.side != f2.side || f1.center != f2.center) throw ConfigError("compare: densities live on different boxes");
  ComparisonReport r;
  std::array<int, 3> shape{};
  for (int a = 0; a < 3; ++a) shape[a] = std::gcd(f1.shape[a], f2.shape[a]);
  const DensityGrid a = shape == f1.shape ? f1 : coarsen(f1, shape);
  const DensityGrid b = shape == f2.shape ? f2 : coarsen(f2, shape);
  r.shape = shape;
  r.note = "both inputs renormalized to unit mass";
  if (shape != f1.shape || shape != f2.shape) {
    r.note += fmt::format("; block averaged to {}x{}x{}", shape[0], shape[1], shape[2]);
  }
  const auto va = normalized_copy(a), vb = normalized_copy(b);
  const double dv = a.cell_volume();
  const double mean = 1.0 / (a.side * a.side * a.side);
  std::vector<double> d1(va.size()), d2(va.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = std::abs(va[i] - vb[i]);
    d1[i] = d;
    d2[i] = d * d;
    dmax = std::max(dmax, d);
  }
  r.l1_distance = pairwise_sum(d1) * dv;
  r.l2_distance = std::sqrt(pairwise_sum(d2) * dv);
  r.max_rel_deviation = dmax / mean;
  r.pearson_correlation = pearson(va, vb);
  return r;
}

nlohmann::json ComparisonReport::to_json() const {
  return {{"l1_distance", l1_distance},
          {"l2_distance", l2_distance},
          {"max_rel_deviation", max_rel_deviation},
          {"pearson_correlation", pearson_correlation},
          {"shape", shape},
          {"note", note}};
}

}  // namespace helidiff
