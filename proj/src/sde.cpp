#include "helidiff/sde.hpp"

#include <algorithm>
#include <cmath>

#include "helidiff/errors.hpp"
#include "helidiff/linalg.hpp"
#include "helidiff/parallel.hpp"
#include "helidiff/rng.hpp"

namespace helidiff {
namespace {

struct Scratch {
  std::vector<double> upper, J, grad, u;
  Matrix R;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

struct StepBuffers {
  std::vector<double> x0, xt, a0, a1, V0, V1, dW;
  explicit StepBuffers(int n) : x0(n), xt(n), a0(n), a1(n), V0(n * n), V1(n * n), dW(n) {}
};

bool finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

double radius(std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return std::sqrt(r2);
}

// Vector q = V V^T grad H0 at x.
void noise_projected_gradient(const Dynamics& dyn, std::span<const double> x, std::span<double> q,
                              std::span<double> drift, std::span<double> V, std::span<double> grad) {
  const int n = dyn.dim();
  sde_coefficients(dyn, 0.0, x, drift, V);
  dyn.H0->gradient(x, grad);
  for (int i = 0; i < n; ++i) q[i] = 0.0;
  for (int k = 0; k < n; ++k) {
    double uk = 0.0;
    for (int i = 0; i < n; ++i) uk += V[i * n + k] * grad[i];
    for (int i = 0; i < n; ++i) q[i] += V[i * n + k] * uk;
  }
}

constexpr int kMidpointMaxIter = 50;
constexpr double kMidpointTol = 1e-14;

// Fixed-point solve of x1 = x0 + a(xm) dt + V(xm) dW, xm = (x0 + x1) / 2,
// starting from the Heun value already stored in x1.
bool midpoint_solve(const Dynamics& dyn, double beta, double dt, bool noisy, StepBuffers& b, std::span<double> x1) {
  const int n = dyn.dim();
  double scale = 1.0;
  for (double v : b.x0) scale = std::max(scale, std::abs(v));
  for (int it = 0; it < kMidpointMaxIter; ++it) {
    for (int i = 0; i < n; ++i) b.xt[i] = 0.5 * (b.x0[i] + x1[i]);
    dyn.domain.wrap(b.xt);
    sde_coefficients(dyn, beta, b.xt, b.a1, b.V1);
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = b.x0[i] + b.a1[i] * dt;
      if (noisy) {
        for (int r = 0; r < n; ++r) v += b.V1[i * n + r] * b.dW[r];
      }
      change = std::max(change, std::abs(v - x1[i]));
      x1[i] = v;
    }
    if (!std::isfinite(change)) return false;
    if (change <= kMidpointTol * scale) return true;
  }
  return false;
}

}  // namespace

DomainSpec DomainSpec::periodic(double side, std::vector<double> center) {
  DomainSpec d;
  d.kind = Kind::periodic_box;
  d.side = side;
  d.center = std::move(center);
  return d;
}

DomainSpec DomainSpec::unbounded() {
  DomainSpec d;
  d.kind = Kind::unbounded;
  return d;
}

double DomainSpec::lower(int axis) const {
  if (center.empty()) return 0.0;
  return center[axis] - 0.5 * side;
}

void DomainSpec::wrap(std::span<double> x) const {
  if (kind != Kind::periodic_box) return;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lo = lower(static_cast<int>(k));
    double r = std::fmod(x[k] - lo, side);
    if (r < 0.0) r += side;
    if (r >= side) r = 0.0;
    x[k] = lo + r;
  }
}

double NoiseSpec::amplitude_at(int r) const {
  if (amplitude.size() == 1) return amplitude[0];
  return amplitude[r];
}

bool NoiseSpec::silent() const {
  return std::all_of(amplitude.begin(), amplitude.end(), [](double a) { return a == 0.0; });
}

void Dynamics::validate() const {
  const int n = dim();
  if (H0 && H0->dim() != n) throw ConfigError("hamiltonian dimension does not match the operator");
  if (noise.amplitude.size() != 1 && static_cast<int>(noise.amplitude.size()) != n) {
    throw ConfigError("noise amplitude must have one entry or one per axis");
  }
  for (double a : noise.amplitude) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("noise amplitude must be finite and >= 0");
  }
  if (noise.map && noise.map->dim() != n) throw ConfigError("coordinate map dimension does not match the operator");
  if (domain.kind == DomainSpec::Kind::periodic_box) {
    if (!(domain.side > 0.0) || !std::isfinite(domain.side)) throw ConfigError("domain side must be positive");
    if (!domain.center.empty() && static_cast<int>(domain.center.size()) != n) {
      throw ConfigError("domain center dimension does not match the operator");
    }
  }
  if (friction.enabled && !H0) throw ConfigError("friction requires a hamiltonian");
  if (friction.enabled && !friction.adaptive && !std::isfinite(friction.beta)) {
    throw ConfigError("friction beta must be finite");
  }
}

Ensemble::Ensemble(int dim_, std::size_t count, std::uint64_t seed_)
    : dim(dim_), seed(seed_), positions(count * dim_, 0.0), flagged(count, 0) {
  require(dim_ >= 1, "Ensemble: dimension must be positive");
  require(count >= 1, "Ensemble: at least one particle is required");
}

std::size_t Ensemble::flagged_count() const {
  return static_cast<std::size_t>(std::count_if(flagged.begin(), flagged.end(), [](auto f) { return f != 0; }));
}

Ensemble initialize_ensemble(int dim, std::size_t count, std::uint64_t seed, const InitSpec& init,
                             const DomainSpec& domain) {
  if (count == 0) throw ConfigError("particle count must be at least 1");
  if (init.kind != InitSpec::Kind::flat && static_cast<int>(init.center.size()) != dim) {
    throw ConfigError("initial condition center must have one entry per dimension");
  }
  if (init.kind == InitSpec::Kind::gaussian && !(init.sigma > 0.0)) throw ConfigError("gaussian sigma must be > 0");
  Ensemble ens(dim, count, seed);
  const bool periodic = domain.kind == DomainSpec::Kind::periodic_box;
  const double side = periodic ? domain.side : init.flat_side;
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(dim);
    for (std::size_t i = begin; i < end; ++i) {
      ParticleStream rs(seed, i, 0, StreamPurpose::initial_condition);
      auto x = ens.particle(i);
      switch (init.kind) {
        case InitSpec::Kind::flat:
          for (int k = 0; k < dim; ++k) {
            const double lo = periodic ? domain.lower(k)
                                       : (init.center.empty() ? 0.0 : init.center[k]) - 0.5 * side;
            x[k] = lo + side * rs.uniform();
          }
          break;
        case InitSpec::Kind::gaussian:
          rs.normals(z);
          for (int k = 0; k < dim; ++k) x[k] = init.center[k] + init.sigma * z[k];
          break;
        case InitSpec::Kind::point:
          for (int k = 0; k < dim; ++k) x[k] = init.center[k];
          break;
      }
      domain.wrap(x);
    }
  });
  return ens;
}

void sde_coefficients(const Dynamics& dyn, double beta, std::span<const double> x, std::span<double> drift,
                      std::span<double> V) {
  const int n = dyn.dim();
  auto& s = scratch();
  s.upper.resize(dyn.J.pair_count());
  s.J.assign(static_cast<std::size_t>(n) * n, 0.0);
  dyn.J.eval_upper(x, s.upper);
  std::size_t p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) {
      s.J[i * n + j] = s.upper[p];
      s.J[j * n + i] = -s.upper[p];
    }
  }

  // V^{ir} = J^{ij} R_j^r amplitude_r with R_j^r = dy^r/dx^j = R(r, j).
  if (!dyn.noise.map || dyn.noise.map->is_identity()) {
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < n; ++r) V[i * n + r] = s.J[i * n + r] * dyn.noise.amplitude_at(r);
    }
  } else {
    dyn.noise.map->jacobian(x, s.R);
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < n; ++r) {
        double v = 0.0;
        for (int j = 0; j < n; ++j) v += s.J[i * n + j] * s.R(r, j);
        V[i * n + r] = v * dyn.noise.amplitude_at(r);
      }
    }
  }

  std::fill(drift.begin(), drift.end(), 0.0);
  if (!dyn.H0) return;
  s.grad.resize(n);
  dyn.H0->gradient(x, s.grad);
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int j = 0; j < n; ++j) v += s.J[i * n + j] * s.grad[j];
    drift[i] = v;
  }
  if (beta != 0.0) {
    s.u.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) s.u[k] += V[i * n + k] * s.grad[i];
    }
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += V[i * n + k] * s.u[k];
      drift[i] -= 0.5 * beta * v;
    }
  }
}

std::size_t step_stratonovich(Ensemble& ens, const Dynamics& dyn, double dt, double beta) {
  require(dt > 0.0 && std::isfinite(dt), "step_stratonovich: dt must be positive");
  require(ens.dim == dyn.dim(), "step_stratonovich: ensemble and operator dimensions differ");
  const int n = ens.dim;
  const bool noisy = !dyn.noise.silent();
  const double sqdt = std::sqrt(dt);
  const std::size_t before = ens.flagged_count();
  const std::uint32_t step = ens.step;

  parallel_for(ens.size(), [&](std::size_t begin, std::size_t end) {
    StepBuffers b(n);
    for (std::size_t p = begin; p < end; ++p) {
      if (ens.flagged[p]) continue;
      auto x = ens.particle(p);
      std::copy(x.begin(), x.end(), b.x0.begin());
      if (noisy) {
        ParticleStream rs(ens.seed, p, step);
        rs.normals(b.dW);
        for (auto& w : b.dW) w *= sqdt;
      }

      sde_coefficients(dyn, beta, b.x0, b.a0, b.V0);
      for (int i = 0; i < n; ++i) {
        double v = b.x0[i] + b.a0[i] * dt;
        if (noisy) {
          for (int r = 0; r < n; ++r) v += b.V0[i * n + r] * b.dW[r];
        }
        b.xt[i] = v;
      }
      dyn.domain.wrap(b.xt);
      if (!finite(b.xt)) {
        ens.flagged[p] = 1;
        continue;
      }
      sde_coefficients(dyn, beta, b.xt, b.a1, b.V1);
      for (int i = 0; i < n; ++i) {
        double v = b.x0[i] + 0.5 * (b.a0[i] + b.a1[i]) * dt;
        if (noisy) {
          for (int r = 0; r < n; ++r) v += 0.5 * (b.V0[i * n + r] + b.V1[i * n + r]) * b.dW[r];
        }
        x[i] = v;
      }
      if (dyn.scheme == Scheme::midpoint && !midpoint_solve(dyn, beta, dt, noisy, b, x)) {
        std::copy(b.x0.begin(), b.x0.end(), x.begin());
        ens.flagged[p] = 1;
        continue;
      }
      dyn.domain.wrap(x);
      if (!finite(x) || (dyn.excluded_radius > 0.0 && radius(x) < dyn.excluded_radius)) {
        std::copy(b.x0.begin(), b.x0.end(), x.begin());
        ens.flagged[p] = 1;
      }
    }
  });
  ++ens.step;
  return ens.flagged_count() - before;
}

double ensemble_beta(const Ensemble& ens, const Dynamics& dyn) {
  if (!dyn.H0) throw ConfigError("ensemble_beta: a hamiltonian is required");
  const int n = ens.dim;
  std::vector<double> num(ens.size(), 0.0), den(ens.size(), 0.0);
  parallel_for(ens.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> q(n), drift(n), V(n * n), grad(n), xp(n);
    for (std::size_t p = begin; p < end; ++p) {
      if (ens.flagged[p]) continue;
      const auto x = ens.particle(p);
      std::copy(x.begin(), x.end(), xp.begin());
      double div = 0.0;
      for (int j = 0; j < n; ++j) {
        const double x0 = xp[j];
        xp[j] = x0 + kFirstDerivStep;
        noise_projected_gradient(dyn, xp, q, drift, V, grad);
        const double qp = q[j];
        xp[j] = x0 - kFirstDerivStep;
        noise_projected_gradient(dyn, xp, q, drift, V, grad);
        xp[j] = x0;
        div += (qp - q[j]) / (2.0 * kFirstDerivStep);
      }
      num[p] = div;
      noise_projected_gradient(dyn, xp, q, drift, V, grad);
      double d = 0.0;
      for (int k = 0; k < n; ++k) {
        double uk = 0.0;
        for (int i = 0; i < n; ++i) uk += V[i * n + k] * grad[i];
        d += uk * uk;
      }
      den[p] = d;
    }
  });
  const double total_den = pairwise_sum(den);
  if (!(total_den > 1e-12 * static_cast<double>(ens.size()))) {
    throw NumericalError("ensemble_beta: noise does not couple to grad H0, beta is undefined");
  }
  return pairwise_sum(num) / total_den;
}

namespace {

TrackerRow tracker_row(double t, const std::vector<double>& values, const std::vector<double>& initial,
                       const std::vector<std::uint8_t>& flagged) {
  std::vector<double> live, drift;
  live.reserve(values.size());
  double mx = 0.0;
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (flagged[p]) continue;
    live.push_back(values[p]);
    const double scale = std::max(std::abs(initial[p]), 1e-300);
    mx = std::max(mx, std::abs(values[p] - initial[p]) / scale);
  }
  TrackerRow row;
  row.t = t;
  row.max_rel_drift = mx;
  if (live.empty()) return row;
  const double count = static_cast<double>(live.size());
  row.mean = pairwise_sum(live) / count;
  row.min = *std::min_element(live.begin(), live.end());
  row.max = *std::max_element(live.begin(), live.end());
  for (auto& v : live) v = (v - row.mean) * (v - row.mean);
  row.var = pairwise_sum(live) / count;
  return row;
}

std::vector<double> evaluate(const Tracker& tr, const Ensemble& ens) {
  std::vector<double> out(ens.size(), 0.0);
  parallel_for(ens.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) out[p] = tr.fn(ens.particle(p));
  });
  return out;
}

}  // namespace

EnsembleHistory run_ensemble(Ensemble ens, const Dynamics& dyn, const IntegratorSpec& spec,
                             const std::vector<Tracker>& trackers, const SnapshotSink& sink) {
  dyn.validate();
  if (!(spec.dt > 0.0) || spec.steps == 0) throw ConfigError("integrator needs dt > 0 and steps >= 1");
  if (spec.tracker_every == 0) throw ConfigError("tracker_every must be >= 1");
  if (ens.dim != dyn.dim()) throw ConfigError("ensemble dimension does not match the operator");

  EnsembleHistory h;
  std::vector<std::vector<double>> initial;
  for (const auto& tr : trackers) {
    initial.push_back(evaluate(tr, ens));
    h.trackers.push_back({tr.name, {tracker_row(0.0, initial.back(), initial.back(), ens.flagged)}});
  }
  std::uint32_t last_snapshot = 0;
  bool any_snapshot = false;
  auto snapshot = [&](std::uint32_t s) {
    if (sink) {
      sink(s, s * spec.dt, ens);
    } else {
      h.snapshots.push_back({s, s * spec.dt, ens.positions});
    }
    last_snapshot = s;
    any_snapshot = true;
  };
  if (spec.snapshot_every > 0) snapshot(0);

  double beta = 0.0;
  if (dyn.friction.enabled) {
    beta = dyn.friction.adaptive ? ensemble_beta(ens, dyn) : dyn.friction.beta;
    h.beta_trace.emplace_back(0.0, beta);
  }
  for (std::uint32_t s = 1; s <= spec.steps; ++s) {
    step_stratonovich(ens, dyn, spec.dt, beta);
    const double t = s * spec.dt;
    if (s % spec.tracker_every == 0 || s == spec.steps) {
      for (std::size_t k = 0; k < trackers.size(); ++k) {
        h.trackers[k].rows.push_back(tracker_row(t, evaluate(trackers[k], ens), initial[k], ens.flagged));
      }
      if (dyn.friction.enabled && dyn.friction.adaptive) {
        beta = ensemble_beta(ens, dyn);
        h.beta_trace.emplace_back(t, beta);
      }
    }
    if ((spec.snapshot_every > 0 && s % spec.snapshot_every == 0) ||
        (s == spec.steps && (!any_snapshot || last_snapshot != s))) {
      snapshot(s);
    }
  }
  h.flagged = ens.flagged_count();
  h.final_state = std::move(ens);
  return h;
}

}  // namespace helidiff
