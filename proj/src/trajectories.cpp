#include "bohmwork/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "bohmwork/errors.hpp"
#include "bohmwork/parallel.hpp"
#include "bohmwork/random.hpp"

namespace bohmwork {

InverseCdfSampler::InverseCdfSampler(const Grid1D& grid, const RealVector& density) {
  const std::size_t n = grid.size();
  if (density.size() != n) throw ValidationError("density size does not match the grid");
  for (double r : density) {
    if (!std::isfinite(r) || r < 0.0) throw ValidationError("density must be finite and non-negative");
  }
  x_.resize(n + 1);
  cdf_.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) x_[i] = grid.x(i);
  x_[n] = grid.x_max();
  for (std::size_t i = 0; i < n; ++i) {
    cdf_[i + 1] = cdf_[i] + 0.5 * (density[i] + density[(i + 1) % n]) * grid.dx();
  }
  const double total = cdf_[n];
  if (!(total > 0.0)) throw DegenerateStateError("cannot sample from a zero density");
  for (auto& c : cdf_) c /= total;
  cdf_[n] = 1.0;
}

double InverseCdfSampler::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  // First cell whose upper CDF reaches u; zero-mass cells are skipped.
  auto it = std::lower_bound(cdf_.begin() + 1, cdf_.end(), u);
  if (it == cdf_.end()) --it;
  const auto j = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  const double lo = cdf_[j], hi = cdf_[j + 1];
  const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.0;
  return x_[j] + frac * (x_[j + 1] - x_[j]);
}

std::vector<double> InverseCdfSampler::sample(std::size_t n, std::uint64_t seed) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampleRng rng(seed, streams::kInitialPosition, i);
    out[i] = quantile(rng.uniform());
  }
  return out;
}

std::vector<double> sample_initial_positions(const Grid1D& grid, const RealVector& density, std::size_t n,
                                             std::uint64_t seed) {
  return InverseCdfSampler(grid, density).sample(n, seed);
}

std::vector<double> uniform_times(double t0, double t1, std::size_t n_intervals) {
  if (n_intervals < 1 || !(t1 > t0)) throw ValidationError("time grid needs t1 > t0 and at least one interval");
  std::vector<double> t(n_intervals + 1);
  const double h = (t1 - t0) / static_cast<double>(n_intervals);
  for (std::size_t k = 0; k <= n_intervals; ++k) t[k] = t0 + static_cast<double>(k) * h;
  t.back() = t1;
  return t;
}

FieldSeries build_field_series(const std::vector<double>& times, const FieldSampler& sampler,
                               const HamiltonianSpec& h, double probe_dt, std::size_t threads) {
  h.validate();
  if (times.size() < 2) throw ValidationError("field series needs at least two times");
  if (!(probe_dt > 0.0)) throw ValidationError("probe_dt must be > 0");
  const double span = times.back() - times.front();
  const double spacing = span / static_cast<double>(times.size() - 1);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double expected = times.front() + static_cast<double>(k) * spacing;
    if (std::abs(times[k] - expected) > 1e-9 * std::max(1.0, span)) {
      throw ValidationError("field series times must be uniformly spaced");
    }
  }

  const std::size_t K = times.size();
  FieldSeries s{Grid1D(sampler(0, 0.0).grid), h, times, {}, {}, {}, {}, {}};
  s.velocity.resize(K);
  s.local_energy.resize(K);
  s.dvq_dt.resize(K);
  std::vector<RealVector> density(K);
  parallel_for(K, threads, [&](std::size_t k) {
    BohmFields f = sampler(k, 0.0);
    const BohmFields fp = sampler(k, probe_dt);
    const BohmFields fm = sampler(k, -probe_dt);
    RealVector d(f.quantum_potential.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = (fp.quantum_potential[i] - fm.quantum_potential[i]) / (2.0 * probe_dt);
    }
    s.velocity[k] = std::move(f.velocity);
    s.local_energy[k] = std::move(f.local_energy);
    s.dvq_dt[k] = std::move(d);
    if (k == 0 || k + 1 == K) density[k] = std::move(f.density);
  });
  s.initial_density = std::move(density.front());
  s.final_density = std::move(density.back());
  return s;
}

FieldSeries field_series_from_snapshots(const SnapshotSeries& snapshots, const HamiltonianSpec& h,
                                        const FieldOptions& options, double probe_dt, std::size_t threads) {
  if (probe_dt == 0.0) probe_dt = snapshots.step_dt > 0.0 ? snapshots.step_dt : kDefaultProbeDt;
  if (probe_dt > max_step(h)) throw StepSizeError("probe_dt exceeds the Hamiltonian step bound");
  const Propagator prop(snapshots.grid, h);
  const FieldSampler sampler = [&](std::size_t k, double offset) {
    if (offset == 0.0) return compute_fields(snapshots.states[k], h, snapshots.times[k], options);
    WaveFunction psi = snapshots.states[k];
    psi.time = snapshots.times[k];
    prop.step(psi, offset);
    return compute_fields(psi, h, snapshots.times[k] + offset, options);
  };
  return build_field_series(snapshots.times, sampler, h, probe_dt, threads);
}

FieldSeries field_series_from_exact(const ExactState& state, const std::vector<double>& times,
                                    const HamiltonianSpec& h, const FieldOptions& options, double probe_dt,
                                    std::size_t threads) {
  const FieldSampler sampler = [&](std::size_t k, double offset) {
    const double t = times[k] + offset;
    return compute_fields(state(t), h, t, options);
  };
  return build_field_series(times, sampler, h, probe_dt, threads);
}

namespace {

// Four-point Lagrange stencil around x; nodes j-1 .. j+2 with x in [x_j, x_{j+1}).
struct Stencil {
  std::size_t j0 = 0;
  double w[4] = {0, 0, 0, 0};
};

Stencil make_stencil(const Grid1D& g, double x) {
  const double r = (x - g.x_min()) / g.dx();
  const double fl = std::floor(r);
  if (!std::isfinite(r) || fl < 1.0 || fl + 2.0 > static_cast<double>(g.size() - 1)) {
    std::ostringstream msg;
    msg << "trajectory left the grid interior at x = " << x;
    throw DomainError(msg.str());
  }
  const double s = r - fl;
  Stencil st;
  st.j0 = static_cast<std::size_t>(fl) - 1;
  st.w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
  st.w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  st.w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
  st.w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
  return st;
}

double apply(const RealVector& f, const Stencil& st) {
  return st.w[0] * f[st.j0] + st.w[1] * f[st.j0 + 1] + st.w[2] * f[st.j0 + 2] + st.w[3] * f[st.j0 + 3];
}

struct TimeSlot {
  std::size_t k = 0;
  double theta = 0.0;
};

class FieldProbe {
 public:
  explicit FieldProbe(const FieldSeries& s) : s_(s), inv_spacing_(1.0 / s.spacing()) {}

  TimeSlot slot(double t) const {
    const std::size_t K = s_.size();
    const double r = (t - s_.t_start()) * inv_spacing_;
    auto k = static_cast<std::size_t>(std::clamp(std::floor(r), 0.0, static_cast<double>(K - 2)));
    const double theta = (t - s_.times[k]) * inv_spacing_;
    return {k, theta};
  }

  double value(const std::vector<RealVector>& field, const TimeSlot& ts, const Stencil& st, double x,
               const char* what) const {
    const double a = apply(field[ts.k], st);
    const double b = apply(field[ts.k + 1], st);
    const double v = (1.0 - ts.theta) * a + ts.theta * b;
    if (std::isnan(v)) {
      std::ostringstream msg;
      msg << "invalid " << what << " near a node at x = " << x << ", t = " << s_.times[ts.k];
      throw NodeCollisionError(msg.str());
    }
    return v;
  }

  double velocity(double t, double x) const {
    return value(s_.velocity, slot(t), make_stencil(s_.grid, x), x, "velocity");
  }

  double energy(double t, double x) const {
    return value(s_.local_energy, slot(t), make_stencil(s_.grid, x), x, "local energy");
  }

  /// Power dH/dt along a trajectory at (t, x) moving with velocity v.
  double power(double t, double x, double v) const {
    const auto& h = s_.hamiltonian;
    const double dvq = value(s_.dvq_dt, slot(t), make_stencil(s_.grid, x), x, "quantum potential");
    const double p = h.mass * (v + h.f2(t));
    return -x * h.df1(t) - p * h.df2(t) + dvq;
  }

 private:
  const FieldSeries& s_;
  double inv_spacing_;
};

}  // namespace

void validate_integration(const FieldSeries& series, const IntegrationOptions& options) {
  if (series.size() < 2) throw ValidationError("field series needs at least two snapshots");
  const double spacing = series.spacing();
  const double tol = 1e-9 * spacing;
  if (!(options.ode_dt > 0.0)) throw ValidationError("ode_dt must be > 0");
  if (options.ode_dt > spacing + tol) throw ValidationError("ode_dt must not exceed the snapshot spacing");
  if (spacing > 4.0 * options.ode_dt + tol) {
    throw ValidationError("snapshot spacing must be at most 4 * ode_dt");
  }
}

Trajectory integrate_trajectory(double x0, const FieldSeries& series, const IntegrationOptions& options) {
  validate_integration(series, options);
  const FieldProbe probe(series);
  const double t0 = series.t_start();
  const double span = series.t_end() - t0;
  const auto n_steps = static_cast<std::size_t>(std::ceil(span / options.ode_dt - 1e-9));
  const double h = span / static_cast<double>(n_steps);

  Trajectory tr;
  tr.x0 = x0;
  double x = x0, t = t0;
  double v = probe.velocity(t, x);
  double P = probe.power(t, x, v);
  double W = 0.0;
  auto record = [&] {
    tr.times.push_back(t);
    tr.positions.push_back(x);
    tr.energies.push_back(probe.energy(t, x));
    tr.work_partial.push_back(W);
  };
  record();

  for (std::size_t s = 1; s <= n_steps; ++s) {
    const double th = t + 0.5 * h;
    const double k1 = v;
    const double k2 = probe.velocity(th, x + 0.5 * h * k1);
    const double k3 = probe.velocity(th, x + 0.5 * h * k2);
    const double t_new = s == n_steps ? series.t_end() : t0 + static_cast<double>(s) * h;
    const double k4 = probe.velocity(t_new, x + h * k3);
    const double x_new = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double v_new = probe.velocity(t_new, x_new);

    // Cubic Hermite midpoint keeps Simpson's rule fourth-order along the path.
    const double x_mid = 0.5 * (x + x_new) + h * (v - v_new) / 8.0;
    const double P_mid = probe.power(th, x_mid, probe.velocity(th, x_mid));
    const double P_new = probe.power(t_new, x_new, v_new);
    W += h / 6.0 * (P + 4.0 * P_mid + P_new);

    x = x_new;
    v = v_new;
    P = P_new;
    t = t_new;
    if (s == n_steps || (options.record_stride > 0 && s % options.record_stride == 0)) record();
  }

  tr.work_integral = W;
  tr.work_endpoint = tr.energies.back() - tr.energies.front();
  return tr;
}

EnsembleResult integrate_positions(const std::vector<double>& x0, const FieldSeries& series,
                                   const IntegrationOptions& options, std::size_t failure_budget,
                                   std::size_t threads) {
  validate_integration(series, options);
  const std::size_t n = x0.size();
  std::vector<std::optional<Trajectory>> done(n);
  std::vector<std::optional<TrajectoryFailure>> failed(n);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      Trajectory tr = integrate_trajectory(x0[i], series, options);
      tr.sample = i;
      done[i] = std::move(tr);
    } catch (const NodeCollisionError& e) {
      failed[i] = TrajectoryFailure{i, x0[i], "node_collision", e.what()};
    } catch (const DomainError& e) {
      failed[i] = TrajectoryFailure{i, x0[i], "domain", e.what()};
    }
  });

  EnsembleResult out;
  out.trajectories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) out.trajectories.push_back(std::move(*done[i]));
    if (failed[i]) {
      if (failed[i]->kind == "node_collision") ++out.node_collisions;
      else ++out.domain_exits;
      out.failures.push_back(std::move(*failed[i]));
    }
  }
  if (out.failures.size() > failure_budget) {
    const auto& first = out.failures.front();
    std::ostringstream msg;
    msg << out.failures.size() << " trajectories failed (budget " << failure_budget << "); first at sample "
        << first.sample << " (x0 = " << first.x0 << "): " << first.message;
    throw EnsembleError(msg.str(), first.sample);
  }
  return out;
}

EnsembleResult run_ensemble(const TrajectorySpec& spec, const FieldSeries& series) {
  if (spec.n_samples < 1) throw ValidationError("n_samples must be >= 1");
  const auto x0 = sample_initial_positions(series.grid, series.initial_density, spec.n_samples, spec.rng_seed);
  return integrate_positions(x0, series, spec.integration, spec.failure_budget, spec.threads);
}

}  // namespace bohmwork
