#include "bohmwork/mixtures_estimators.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "bohmwork/errors.hpp"
#include "bohmwork/parallel.hpp"
#include "bohmwork/propagator.hpp"
#include "bohmwork/random.hpp"

namespace bohmwork {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWorkConsistencyTol = 1e-3;

bool is_thermal(MixtureKind k) { return k == MixtureKind::ThermalEigenstates || k == MixtureKind::ThermalCoherent; }

// Neumaier-compensated sum.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double jittered_quantile_u(std::uint64_t seed, std::size_t stratum, std::size_t i, std::size_t n) {
  SampleRng rng(seed, streams::kStratumJitter, (static_cast<std::uint64_t>(stratum) << 32) | i);
  return (static_cast<double>(i) + rng.uniform_open()) / static_cast<double>(n);
}

// Position samplers for levels lo..hi of the displaced number state at t = 0, on a
// grid wide and fine enough for phi_hi.
std::vector<InverseCdfSampler> eigen_samplers(const OscillatorParams& p, int lo, int hi) {
  const double ell = std::sqrt(p.hbar / (p.m * p.omega));
  const double center = p.length_unit() * eigen_displacement(p, 0.0).real();
  const double turning = std::sqrt(2.0 * hi + 1.0);
  const double half_width = turning + 7.0;
  const double dxi = std::min(0.02, 0.3 / turning);
  const auto n_points = std::bit_ceil(static_cast<std::size_t>(std::ceil(2.0 * half_width / dxi)));
  const Grid1D grid(center - half_width * ell, center + half_width * ell, n_points);
  std::vector<RealVector> densities(static_cast<std::size_t>(hi - lo + 1), RealVector(n_points));
  for (std::size_t i = 0; i < n_points; ++i) {
    const RealVector phi = hermite_functions(hi, (grid.x(i) - center) / ell);
    for (int n = lo; n <= hi; ++n) densities[static_cast<std::size_t>(n - lo)][i] = phi[n] * phi[n];
  }
  std::vector<InverseCdfSampler> out;
  out.reserve(densities.size());
  for (const auto& d : densities) out.emplace_back(grid, d);
  return out;
}

// Closed-form trajectory record for dumps: positions on a uniform time grid, partial
// work from the endpoint identity.
template <class Path, class Energy>
Trajectory closed_form_trajectory(std::size_t sample, double x0, double tau, std::size_t n_points, Path path,
                                  Energy energy) {
  Trajectory tr;
  tr.sample = sample;
  tr.x0 = x0;
  const double e0 = energy(x0, 0.0);
  for (std::size_t k = 0; k <= n_points; ++k) {
    const double t = k == n_points ? tau : tau * static_cast<double>(k) / static_cast<double>(n_points);
    const double x = k == 0 ? x0 : path(x0, t);
    tr.times.push_back(t);
    tr.positions.push_back(x);
    tr.energies.push_back(energy(x, t));
    tr.work_partial.push_back(tr.energies.back() - e0);
  }
  tr.work_integral = tr.work_partial.back();
  tr.work_endpoint = tr.work_integral;
  return tr;
}

// Odd extension of the well state to [-L, L): periodic and smooth, so the spectral
// propagator evolves it exactly as the hard-wall problem.
WaveFunction odd_extended_well(const TwoLevelWellState& s, const Grid1D& grid) {
  ComplexVector v(grid.size());
  const double k0 = kPi / s.L;
  const double norm = std::sqrt(1.0 / s.L);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    v[i] = norm * (s.c0 * std::sin(k0 * x) + s.c1 * std::sin(2.0 * k0 * x));
  }
  return WaveFunction(grid, std::move(v), 0.0);
}

struct Stratum {
  double weight = 0.0;
  std::size_t count = 0;
  int level = 0;
  Complex eta{0.0, 0.0};
};

struct Accumulated {
  std::vector<WorkSample> samples;
  std::vector<Trajectory> trajectories;
  MixtureDiagnostics diag;
  std::size_t failures = 0;
  std::optional<SnapshotSeries> snapshots;
};

void record_consistency(MixtureDiagnostics& d, double w_int, double w_end) {
  const double gap = std::abs(w_int - w_end);
  d.work_consistency_max = std::max(d.work_consistency_max, gap);
  if (gap > kWorkConsistencyTol) ++d.work_consistency_violations;
}

// Integrates the ensemble of one stratum and appends survivors with weight P_h / n_surviving.
void integrate_stratum(std::size_t h, const Stratum& st, const FieldSeries& series, const SamplingOptions& so,
                       const IntegrationOptions& io, std::size_t sample_offset, Accumulated& acc) {
  const InverseCdfSampler sampler(series.grid, series.initial_density);
  std::vector<double> x0(st.count);
  for (std::size_t i = 0; i < st.count; ++i) x0[i] = sampler.quantile(jittered_quantile_u(so.seed, h, i, st.count));
  const std::size_t remaining = so.failure_budget - std::min(so.failure_budget, acc.failures);
  EnsembleResult r;
  try {
    r = integrate_positions(x0, series, io, remaining, so.threads);
  } catch (const EnsembleError& e) {
    std::ostringstream msg;
    msg << "stratum " << h << ": " << e.what();
    throw EnsembleError(msg.str(), sample_offset + e.sample_index());
  }
  acc.failures += r.failures.size();
  acc.diag.node_collisions += r.node_collisions;
  acc.diag.domain_exits += r.domain_exits;
  if (r.trajectories.empty()) {
    throw EnsembleError("every trajectory of stratum " + std::to_string(h) + " failed", sample_offset);
  }
  const double w = st.weight / static_cast<double>(r.trajectories.size());
  for (auto& tr : r.trajectories) {
    record_consistency(acc.diag, tr.work_integral, tr.work_endpoint);
    acc.samples.push_back({tr.work_integral, tr.work_endpoint, w, h, tr.x0});
    if (acc.trajectories.size() < so.keep_trajectories) {
      tr.sample += sample_offset;
      tr.weight = w;
      acc.trajectories.push_back(std::move(tr));
    }
  }
}

FieldSeries numeric_series(const WaveFunction& psi0, const HamiltonianSpec& h, double t_end,
                           const NumericSetup& setup, std::size_t threads, Accumulated& acc, bool keep) {
  PropagationPlan plan;
  plan.hamiltonian = h;
  plan.t_start = 0.0;
  plan.t_end = t_end;
  plan.n_steps = setup.n_steps;
  plan.snapshot_stride = setup.snapshot_stride;
  SnapshotSeries snaps = propagate(psi0, plan);
  acc.diag.max_norm_drift = std::max(acc.diag.max_norm_drift, snaps.max_norm_drift);
  FieldSeries series = field_series_from_snapshots(snaps, h, setup.fields, 0.0, threads);
  if (keep && !acc.snapshots) acc.snapshots = std::move(snaps);
  return series;
}

std::vector<Stratum> build_strata(const MixtureSpec& spec, Engine engine, const SamplingOptions& so) {
  std::vector<Stratum> strata;
  switch (spec.kind) {
    case MixtureKind::PureEigenstate:
      strata.push_back({1.0, so.n_samples, spec.n, {}});
      break;
    case MixtureKind::PureCoherent:
      strata.push_back({1.0, so.n_samples, 0, spec.eta});
      break;
    case MixtureKind::TwoLevelWell:
      strata.push_back({1.0, so.n_samples, 0, {}});
      break;
    case MixtureKind::ThermalEigenstates: {
      const auto p = thermal_weights(spec.oscillator, spec.beta, spec.n_max);
      const auto counts = allocate_strata(p, so.n_samples, so.stratum_floor);
      for (std::size_t n = 0; n < p.size(); ++n) strata.push_back({p[n], counts[n], static_cast<int>(n), {}});
      break;
    }
    case MixtureKind::ThermalCoherent: {
      std::size_t labels = spec.n_eta_samples;
      if (labels == 0) {
        if (engine == Engine::Numeric) throw ValidationError("numeric coherent mixture needs n_eta_samples > 0");
        labels = so.n_samples;
      }
      if (so.n_samples < labels) {
        throw AllocationError("trajectory budget " + std::to_string(so.n_samples) + " is below the label count " +
                              std::to_string(labels));
      }
      const auto etas = sample_coherent_labels(spec.oscillator, spec.beta, labels, so.seed);
      const std::size_t base = so.n_samples / labels;
      const std::size_t extra = so.n_samples % labels;
      for (std::size_t j = 0; j < labels; ++j) {
        strata.push_back({1.0 / static_cast<double>(labels), base + (j < extra ? 1 : 0), 0, etas[j]});
      }
      break;
    }
  }
  return strata;
}

void run_analytic_oscillator(const MixtureSpec& spec, const std::vector<Stratum>& strata, const SamplingOptions& so,
                             Accumulated& acc) {
  const auto& p = spec.oscillator;
  const double tau = p.tau;
  const bool coherent = spec.kind == MixtureKind::PureCoherent || spec.kind == MixtureKind::ThermalCoherent;
  const std::size_t dump_points = 128;
  std::size_t offset = 0;

  if (coherent) {
    const boost::math::normal_distribution<double> unit;
    for (std::size_t h = 0; h < strata.size(); ++h) {
      const auto& st = strata[h];
      const double center = p.length_unit() * st.eta.real();
      const double w = st.weight / static_cast<double>(st.count);
      for (std::size_t i = 0; i < st.count; ++i) {
        const double u = jittered_quantile_u(so.seed, h, i, st.count);
        const double x0 = center + p.sigma0() * boost::math::quantile(unit, u);
        const double xt = coherent_trajectory(p, st.eta, x0, tau);
        const double w_int = coherent_work(p, st.eta, x0);
        const double w_end = coherent_local_energy(p, st.eta, xt, tau) - coherent_local_energy(p, st.eta, x0, 0.0);
        record_consistency(acc.diag, w_int, w_end);
        acc.samples.push_back({w_int, w_end, w, h, x0});
        if (acc.trajectories.size() < so.keep_trajectories) {
          auto tr = closed_form_trajectory(
              offset + i, x0, tau, dump_points, [&](double a, double t) { return coherent_trajectory(p, st.eta, a, t); },
              [&](double x, double t) { return coherent_local_energy(p, st.eta, x, t); });
          tr.weight = w;
          acc.trajectories.push_back(std::move(tr));
        }
      }
      offset += st.count;
    }
    return;
  }

  constexpr int kChunk = 128;
  const int n_levels = static_cast<int>(strata.size());
  for (int lo = 0; lo < n_levels; lo += kChunk) {
    const int hi = std::min(n_levels, lo + kChunk) - 1;
    const int level_lo = strata[static_cast<std::size_t>(lo)].level;
    const int level_hi = strata[static_cast<std::size_t>(hi)].level;
    const auto samplers = eigen_samplers(p, level_lo, level_hi);
    for (int s = lo; s <= hi; ++s) {
      const auto h = static_cast<std::size_t>(s);
      const auto& st = strata[h];
      const auto& sampler = samplers[static_cast<std::size_t>(st.level - level_lo)];
      const double w = st.weight / static_cast<double>(st.count);
      for (std::size_t i = 0; i < st.count; ++i) {
        const double x0 = sampler.quantile(jittered_quantile_u(so.seed, h, i, st.count));
        const double xt = eigen_trajectory(p, x0, tau);
        const double w_int = eigen_work(p, x0);
        const double w_end = eigen_local_energy(p, st.level, xt, tau) - eigen_local_energy(p, st.level, x0, 0.0);
        record_consistency(acc.diag, w_int, w_end);
        acc.samples.push_back({w_int, w_end, w, h, x0});
        if (acc.trajectories.size() < so.keep_trajectories) {
          auto tr = closed_form_trajectory(
              offset + i, x0, tau, dump_points, [&](double a, double t) { return eigen_trajectory(p, a, t); },
              [&](double x, double t) { return eigen_local_energy(p, st.level, x, t); });
          tr.weight = w;
          acc.trajectories.push_back(std::move(tr));
        }
      }
      offset += st.count;
    }
  }
}

void run_well(const MixtureSpec& spec, Engine engine, const Stratum& st, const SamplingOptions& so,
              const NumericSetup& setup, Accumulated& acc) {
  const auto& s = spec.well;
  const HamiltonianSpec h = two_level_well_hamiltonian(s);
  const double T = s.period();
  const IntegrationOptions io{setup.ode_dt > 0.0 ? setup.ode_dt : T / static_cast<double>(setup.n_steps),
                              so.record_stride};
  if (engine == Engine::Numeric) {
    const Grid1D grid(-s.L, s.L, setup.grid.size());
    const FieldSeries series = numeric_series(odd_extended_well(s, grid), h, T, setup, so.threads, acc, so.keep_snapshots);
    integrate_stratum(0, st, series, so, io, 0, acc);
    return;
  }
  const Grid1D grid(0.0, s.L, setup.grid.size());
  const FieldSampler sampler = [&](std::size_t k, double offset) {
    const double t = T * static_cast<double>(k) / static_cast<double>(setup.n_steps / setup.snapshot_stride) + offset;
    ComplexVector d1, d2;
    two_level_well_derivatives(s, t, grid, d1, d2);
    return fields_from_derivatives(two_level_well_wavefunction(s, t, grid), d1, d2, h, t, setup.fields);
  };
  const auto times = uniform_times(0.0, T, setup.n_steps / setup.snapshot_stride);
  const FieldSeries series = build_field_series(times, sampler, h, std::min(kDefaultProbeDt, T / 1024.0), so.threads);
  integrate_stratum(0, st, series, so, io, 0, acc);
}

void run_numeric_oscillator(const MixtureSpec& spec, const std::vector<Stratum>& strata, const SamplingOptions& so,
                            const NumericSetup& setup, Accumulated& acc) {
  const auto& p = spec.oscillator;
  const HamiltonianSpec h = driven_oscillator(p);
  const IntegrationOptions io{setup.resolved_ode_dt(p.tau), so.record_stride};
  const bool coherent = spec.kind == MixtureKind::PureCoherent || spec.kind == MixtureKind::ThermalCoherent;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const auto& st = strata[k];
    const WaveFunction psi0 =
        coherent ? coherent_state(p, st.eta, 0.0, setup.grid) : displaced_number_state(p, st.level, 0.0, setup.grid);
    const FieldSeries series = numeric_series(psi0, h, p.tau, setup, so.threads, acc, so.keep_snapshots);
    integrate_stratum(k, st, series, so, io, offset, acc);
    offset += st.count;
  }
}

// Half-widths and envelope used by the coverage rule, in position and wavenumber.
struct Extent {
  double x_lo, x_hi, k_max;
};

Extent eigen_extent(const OscillatorParams& p, int n_max) {
  const double ell = std::sqrt(p.hbar / (p.m * p.omega));
  const double turning = std::sqrt(2.0 * n_max + 1.0);
  const double rx = turning * ell + 3.0 * p.sigma0();
  const double rk = turning / ell + 3.0 / (2.0 * p.sigma0());
  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0};
  for (int j = 0; j <= 512; ++j) {
    const Complex d = eigen_displacement(p, p.tau * j / 512.0);
    const double xc = p.length_unit() * d.real();
    const double kc = std::sqrt(2.0 * p.m * p.omega / p.hbar) * d.imag();
    e.x_lo = std::min(e.x_lo, xc - rx);
    e.x_hi = std::max(e.x_hi, xc + rx);
    e.k_max = std::max(e.k_max, std::abs(kc) + rk);
  }
  return e;
}

Extent coherent_extent(const OscillatorParams& p, Complex eta) {
  const double rx = 4.0 * p.sigma0();
  const double rk = 4.0 / (2.0 * p.sigma0());
  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0};
  for (int j = 0; j <= 512; ++j) {
    const Complex a = coherent_amplitude(p, eta, p.tau * j / 512.0);
    const double xc = p.length_unit() * a.real();
    const double kc = std::sqrt(2.0 * p.m * p.omega / p.hbar) * a.imag();
    e.x_lo = std::min(e.x_lo, xc - rx);
    e.x_hi = std::max(e.x_hi, xc + rx);
    e.k_max = std::max(e.k_max, std::abs(kc) + rk);
  }
  return e;
}

void require_extent(const Extent& e, const Grid1D& g, const std::string& what) {
  const double margin = 3.0 * g.dx();
  const double k_grid = kPi / g.dx();
  std::ostringstream msg;
  msg << std::setprecision(6);
  if (e.x_lo < g.x_min() + margin || e.x_hi > g.x_max() - margin) {
    msg << what << " needs positions in [" << e.x_lo << ", " << e.x_hi << "] but the grid interior is ["
        << g.x_min() + margin << ", " << g.x_max() - margin << "]";
    throw ValidationError(msg.str());
  }
  if (e.k_max > k_grid) {
    msg << what << " needs wavenumbers up to " << e.k_max << " but the grid resolves " << k_grid;
    throw ValidationError(msg.str());
  }
}

}  // namespace

std::string to_string(MixtureKind kind) {
  switch (kind) {
    case MixtureKind::PureEigenstate: return "PureEigenstate";
    case MixtureKind::PureCoherent: return "PureCoherent";
    case MixtureKind::ThermalEigenstates: return "ThermalEigenstates";
    case MixtureKind::ThermalCoherent: return "ThermalCoherent";
    case MixtureKind::TwoLevelWell: return "TwoLevelWell";
  }
  return "unknown";
}

std::string to_string(Engine engine) { return engine == Engine::Analytic ? "analytic" : "numeric"; }

MixtureKind parse_mixture_kind(const std::string& name) {
  for (auto k : {MixtureKind::PureEigenstate, MixtureKind::PureCoherent, MixtureKind::ThermalEigenstates,
                 MixtureKind::ThermalCoherent, MixtureKind::TwoLevelWell}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown mixture kind '" + name + "'");
}

Engine parse_engine(const std::string& name) {
  if (name == "analytic") return Engine::Analytic;
  if (name == "numeric") return Engine::Numeric;
  throw ValidationError("unknown engine '" + name + "'");
}

void MixtureSpec::validate() const {
  if (kind == MixtureKind::TwoLevelWell) {
    well.validate();
    return;
  }
  oscillator.validate();
  if (kind == MixtureKind::PureEigenstate && n < 0) throw ValidationError("eigenstate level n must be >= 0");
  if (kind == MixtureKind::PureCoherent && !(std::isfinite(eta.real()) && std::isfinite(eta.imag()))) {
    throw ValidationError("coherent label eta must be finite");
  }
  if (is_thermal(kind) && !(std::isfinite(beta) && beta > 0.0)) throw ValidationError("beta must be > 0");
  if (kind == MixtureKind::ThermalEigenstates && n_max >= 0) {
    (void)thermal_weights(oscillator, beta, n_max);
  }
  if (kind == MixtureKind::ThermalCoherent && n_eta_samples == 1) {
    throw ValidationError("n_eta_samples must be 0 or at least 2");
  }
}

nlohmann::json to_json(const MixtureSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  if (spec.kind == MixtureKind::TwoLevelWell) {
    const auto& w = spec.well;
    j["well"] = {{"L", w.L},           {"c0", {w.c0.real(), w.c0.imag()}}, {"c1", {w.c1.real(), w.c1.imag()}},
                 {"m", w.m},           {"hbar", w.hbar},                   {"tau", w.period()}};
    return j;
  }
  const auto& p = spec.oscillator;
  j["oscillator"] = {{"m", p.m}, {"omega", p.omega}, {"A", p.A}, {"hbar", p.hbar}, {"tau", p.tau}};
  switch (spec.kind) {
    case MixtureKind::PureEigenstate: j["n"] = spec.n; break;
    case MixtureKind::PureCoherent: j["eta"] = {spec.eta.real(), spec.eta.imag()}; break;
    case MixtureKind::ThermalEigenstates:
      j["beta"] = spec.beta;
      j["n_max"] = spec.n_max >= 0 ? spec.n_max : thermal_n_max(p, spec.beta);
      break;
    case MixtureKind::ThermalCoherent:
      j["beta"] = spec.beta;
      j["n_eta_samples"] = spec.n_eta_samples;
      break;
    case MixtureKind::TwoLevelWell: break;
  }
  return j;
}

int thermal_n_max(const OscillatorParams& p, double beta, double tail) {
  if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
  const double x = beta * p.hbar * p.omega;
  int n = std::max(0, static_cast<int>(std::ceil(-std::log(tail) / x)) - 1);
  while (n > 0 && std::exp(-(n) * x) < tail) --n;
  while (std::exp(-(n + 1.0) * x) >= tail) ++n;
  return n;
}

std::vector<double> thermal_weights(const OscillatorParams& p, double beta, int n_max) {
  if (!(std::isfinite(beta) && beta > 0.0)) throw ValidationError("beta must be > 0");
  p.validate();
  const double x = beta * p.hbar * p.omega;
  if (n_max < 0) n_max = thermal_n_max(p, beta);
  const double tail = std::exp(-(n_max + 1.0) * x);
  if (tail >= kThermalTailBound) {
    std::ostringstream msg;
    msg << "n_max = " << n_max << " leaves thermal tail " << tail << " (bound " << kThermalTailBound << "); need n_max >= "
        << thermal_n_max(p, beta);
    throw TruncationError(msg.str());
  }
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
  const double p0 = -std::expm1(-x);
  Accumulator total;
  for (std::size_t n = 0; n < w.size(); ++n) {
    w[n] = p0 * std::exp(-static_cast<double>(n) * x);
    total.add(w[n]);
  }
  for (auto& v : w) v /= total.value();
  return w;
}

double coherent_label_sigma(const OscillatorParams& p, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
  return std::sqrt(0.5 / std::expm1(beta * p.hbar * p.omega));
}

std::vector<Complex> sample_coherent_labels(const OscillatorParams& p, double beta, std::size_t n,
                                            std::uint64_t seed) {
  const double sigma = coherent_label_sigma(p, beta);
  const Complex alpha = p.alpha();
  std::vector<Complex> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    SampleRng rng(seed, streams::kCoherentLabel, j);
    const double re = rng.normal();
    const double im = rng.normal();
    out[j] = alpha + sigma * Complex(re, im);
  }
  return out;
}

std::vector<std::size_t> allocate_strata(const std::vector<double>& weights, std::size_t budget,
                                         std::size_t floor) {
  if (weights.empty()) throw ValidationError("no strata to allocate");
  if (budget < floor * weights.size()) {
    std::ostringstream msg;
    msg << "trajectory budget " << budget << " cannot cover " << weights.size() << " strata at " << floor
        << " samples each (need " << floor * weights.size() << ")";
    throw AllocationError(msg.str());
  }
  std::vector<std::size_t> n(weights.size());
  for (std::size_t h = 0; h < weights.size(); ++h) {
    const auto proportional = static_cast<std::size_t>(std::llround(static_cast<double>(budget) * weights[h]));
    n[h] = std::max<std::size_t>({floor, proportional, 1});
  }
  return n;
}

Histogram make_histogram(const std::vector<WorkSample>& samples, std::size_t n_bins) {
  if (samples.empty()) throw ValidationError("cannot histogram an empty sample");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return samples[a].work < samples[b].work; });
  Accumulator tw, tw2;
  for (const auto& s : samples) {
    tw.add(s.weight);
    tw2.add(s.weight * s.weight);
  }
  const double total = tw.value();
  if (!(total > 0.0)) throw DegenerateStateError("histogram weights sum to zero");
  const double lo = samples[order.front()].work;
  const double hi = samples[order.back()].work;

  Histogram h;
  if (hi == lo) {
    h.edges = {lo - 0.5, lo + 0.5};
    h.masses = {1.0};
    return h;
  }
  if (n_bins == 0) {
    auto quantile = [&](double q) {
      double c = 0.0;
      for (auto i : order) {
        c += samples[i].weight / total;
        if (c >= q) return samples[i].work;
      }
      return hi;
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double n_eff = total * total / tw2.value();
    if (iqr > 0.0) {
      const double width = 2.0 * iqr / std::cbrt(n_eff);
      n_bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    } else {
      n_bins = static_cast<std::size_t>(std::ceil(std::log2(n_eff) + 1.0));
    }
    n_bins = std::clamp<std::size_t>(n_bins, 1, 1000);
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  h.edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  std::vector<Accumulator> mass(n_bins);
  for (const auto& s : samples) {
    auto b = static_cast<std::size_t>((s.work - lo) / width);
    mass[std::min(b, n_bins - 1)].add(s.weight / total);
  }
  h.masses.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) h.masses[b] = mass[b].value();
  return h;
}

void finalize_distribution(WorkDistribution& d, std::size_t n_bins) {
  if (d.samples.empty()) throw ValidationError("work distribution has no samples");
  Accumulator tw, tw2;
  for (const auto& s : d.samples) {
    if (!(s.weight >= 0.0) || !std::isfinite(s.work)) throw ValidationError("work samples need finite values and weights >= 0");
    tw.add(s.weight);
    tw2.add(s.weight * s.weight);
  }
  if (std::abs(tw.value() - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "work sample weights sum to " << std::setprecision(17) << tw.value();
    throw ValidationError(msg.str());
  }
  d.n_effective = tw.value() * tw.value() / tw2.value();
  d.histogram = make_histogram(d.samples, n_bins);
}

namespace {

// Weighted mean of f with the stratified (or cluster) standard error.
template <class F>
Estimate stratified_mean(const WorkDistribution& d, F f) {
  const std::size_t H = std::max<std::size_t>(
      d.stratum_weights.size(),
      d.samples.empty() ? 0 : 1 + std::max_element(d.samples.begin(), d.samples.end(), [](auto& a, auto& b) {
                                     return a.stratum < b.stratum;
                                   })->stratum);
  std::vector<Accumulator> wsum(H), fsum(H);
  std::vector<std::size_t> count(H, 0);
  Accumulator total_w, total_wf;
  for (const auto& s : d.samples) {
    const double v = f(s.work);
    wsum[s.stratum].add(s.weight);
    fsum[s.stratum].add(s.weight * v);
    ++count[s.stratum];
    total_w.add(s.weight);
    total_wf.add(s.weight * v);
  }
  Estimate e;
  e.value = total_wf.value() / total_w.value();

  std::vector<double> mean_h(H, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    if (count[h] > 0) mean_h[h] = fsum[h].value() / wsum[h].value();
  }
  if (d.random_strata) {
    std::size_t L = 0;
    Accumulator ss;
    for (std::size_t h = 0; h < H; ++h) {
      if (count[h] == 0) continue;
      ++L;
      ss.add((mean_h[h] - e.value) * (mean_h[h] - e.value));
    }
    if (L >= 2) e.std_error = std::sqrt(ss.value() / (static_cast<double>(L) * static_cast<double>(L - 1)));
    return e;
  }
  std::vector<Accumulator> dev(H);
  for (const auto& s : d.samples) {
    const double r = f(s.work) - mean_h[s.stratum];
    dev[s.stratum].add(r * r);
  }
  Accumulator var;
  for (std::size_t h = 0; h < H; ++h) {
    if (count[h] < 2) continue;
    const double P = wsum[h].value() / total_w.value();
    const double n = static_cast<double>(count[h]);
    var.add(P * P * dev[h].value() / (n - 1.0) / n);
  }
  e.std_error = std::sqrt(std::max(0.0, var.value()));
  return e;
}

}  // namespace

Estimate mean_work(const WorkDistribution& d) {
  if (d.samples.empty()) throw DegenerateStateError("work distribution has no samples");
  Accumulator tw, tw2;
  for (const auto& s : d.samples) {
    tw.add(s.weight);
    tw2.add(s.weight * s.weight);
  }
  if (!(tw2.value() > 0.0) || tw.value() * tw.value() / tw2.value() < 2.0) {
    throw DegenerateStateError("mean work needs an effective sample size of at least 2");
  }
  return stratified_mean(d, [](double w) { return w; });
}

ExpWorkEstimate exp_work(const WorkDistribution& d, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
  if (d.samples.empty()) throw DegenerateStateError("work distribution has no samples");
  const auto e = stratified_mean(d, [beta](double w) { return std::exp(-beta * w); });
  ExpWorkEstimate out{beta, e.value, e.std_error, false, 0.0};

  std::vector<double> contrib(d.samples.size());
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    contrib[i] = d.samples[i].weight * std::exp(-beta * d.samples[i].work);
  }
  std::sort(contrib.begin(), contrib.end(), std::greater<>());
  const auto top = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(contrib.size())));
  Accumulator top_sum, all_sum;
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    if (i < top) top_sum.add(contrib[i]);
    all_sum.add(contrib[i]);
  }
  out.top_share = all_sum.value() > 0.0 ? top_sum.value() / all_sum.value() : 0.0;
  out.tail_flag = contrib.size() >= 100 && out.top_share > 0.5;
  return out;
}

double ks_distance(const WorkDistribution& a, const WorkDistribution& b) {
  auto sorted = [](const WorkDistribution& d) {
    std::vector<std::pair<double, double>> v;
    v.reserve(d.samples.size());
    double total = 0.0;
    for (const auto& s : d.samples) total += s.weight;
    for (const auto& s : d.samples) v.emplace_back(s.work, s.weight / total);
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto va = sorted(a), vb = sorted(b);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, dmax = 0.0;
  while (i < va.size() || j < vb.size()) {
    const double x = std::min(i < va.size() ? va[i].first : std::numeric_limits<double>::infinity(),
                              j < vb.size() ? vb[j].first : std::numeric_limits<double>::infinity());
    while (i < va.size() && va[i].first == x) fa += va[i++].second;
    while (j < vb.size() && vb[j].first == x) fb += vb[j++].second;
    dmax = std::max(dmax, std::abs(fa - fb));
  }
  return dmax;
}

double NumericSetup::resolved_ode_dt(double tau) const {
  return ode_dt > 0.0 ? ode_dt : tau / static_cast<double>(n_steps);
}

void check_domain_coverage(const MixtureSpec& spec, const NumericSetup& setup, std::uint64_t seed) {
  const auto& g = setup.grid;
  const auto& p = spec.oscillator;
  switch (spec.kind) {
    case MixtureKind::PureEigenstate:
      require_extent(eigen_extent(p, spec.n), g, "eigenstate n = " + std::to_string(spec.n));
      break;
    case MixtureKind::ThermalEigenstates: {
      const int n_max = spec.n_max >= 0 ? spec.n_max : thermal_n_max(p, spec.beta);
      require_extent(eigen_extent(p, n_max), g, "thermal eigenstate level n_max = " + std::to_string(n_max));
      break;
    }
    case MixtureKind::PureCoherent:
      require_extent(coherent_extent(p, spec.eta), g, "coherent state");
      break;
    case MixtureKind::ThermalCoherent: {
      const auto etas = sample_coherent_labels(p, spec.beta, spec.n_eta_samples, seed);
      for (std::size_t j = 0; j < etas.size(); ++j) {
        require_extent(coherent_extent(p, etas[j]), g, "coherent label " + std::to_string(j));
      }
      break;
    }
    case MixtureKind::TwoLevelWell: {
      // The well runs on its own odd-extended grid [-L, L); only resolution matters.
      const double dx = 2.0 * spec.well.L / static_cast<double>(g.size());
      const double k_needed = 4.0 * kPi / spec.well.L;
      if (kPi / dx < k_needed) throw ValidationError("grid too coarse for the two-level well");
      break;
    }
  }
}

MixtureRun mixture_work_distribution(const MixtureSpec& spec, Engine engine, const SamplingOptions& sampling,
                                     const NumericSetup& setup) {
  spec.validate();
  if (sampling.n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (engine == Engine::Numeric || spec.kind == MixtureKind::TwoLevelWell) {
    if (setup.snapshot_stride < 1 || setup.n_steps % setup.snapshot_stride != 0) {
      throw ValidationError("snapshot_stride must divide n_steps");
    }
  }
  if (engine == Engine::Numeric) check_domain_coverage(spec, setup, sampling.seed);

  const auto strata = build_strata(spec, engine, sampling);
  Accumulated acc;
  acc.diag.n_strata = strata.size();
  if (spec.kind == MixtureKind::TwoLevelWell) {
    run_well(spec, engine, strata.front(), sampling, setup, acc);
  } else if (engine == Engine::Analytic) {
    run_analytic_oscillator(spec, strata, sampling, acc);
  } else {
    run_numeric_oscillator(spec, strata, sampling, setup, acc);
  }

  MixtureRun run;
  run.distribution.samples = std::move(acc.samples);
  run.distribution.random_strata = spec.kind == MixtureKind::ThermalCoherent;
  for (const auto& st : strata) run.distribution.stratum_weights.push_back(st.weight);
  finalize_distribution(run.distribution);
  run.diagnostics = acc.diag;
  run.trajectories = std::move(acc.trajectories);
  run.snapshots = std::move(acc.snapshots);
  return run;
}

nlohmann::json distribution_report(const MixtureSpec& spec, Engine engine, const WorkDistribution& d, double beta) {
  const Estimate m = mean_work(d);
  const ExpWorkEstimate e = exp_work(d, beta);
  nlohmann::json j;
  j["spec"] = to_json(spec);
  j["engine"] = to_string(engine);
  j["n_samples"] = d.samples.size();
  j["n_effective"] = d.n_effective;
  j["mean_W"] = m.value;
  j["stderr_mean"] = m.std_error;
  j["exp_work"] = {{"beta", e.beta},
                   {"value", e.value},
                   {"stderr", e.std_error},
                   {"tail_flag", e.tail_flag},
                   {"top_share", e.top_share}};
  j["histogram"] = {{"edges", d.histogram.edges}, {"masses", d.histogram.masses}};
  return j;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << std::setprecision(17) << "bin_lo,bin_hi,mass\n";
  for (std::size_t b = 0; b < h.masses.size(); ++b) {
    os << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.masses[b] << '\n';
  }
}

}  // namespace bohmwork
