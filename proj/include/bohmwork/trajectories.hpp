#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bohmwork/grid.hpp"
#include "bohmwork/hamiltonian.hpp"
#include "bohmwork/propagator.hpp"
#include "bohmwork/qhj_fields.hpp"

namespace bohmwork {

/// Inverse-CDF sampler over a gridded density. The CDF is accumulated with the
/// trapezoid rule over every cell including the periodic cell [x_{n-1}, x_max),
/// and inverted by linear interpolation.
class InverseCdfSampler {
 public:
  /// Throws DegenerateStateError if the density has no positive mass, and
  /// ValidationError for negative or non-finite entries.
  InverseCdfSampler(const Grid1D& grid, const RealVector& density);

  /// x with CDF(x) = u for u in [0, 1].
  double quantile(double u) const;
  /// n i.i.d. positions; draw i uses the stream (seed, kInitialPosition, i).
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

 private:
  RealVector x_;
  RealVector cdf_;
};

std::vector<double> sample_initial_positions(const Grid1D& grid, const RealVector& density, std::size_t n,
                                             std::uint64_t seed);

/// Velocity, local energy and time derivative of the quantum potential on a
/// uniform time grid, the dense input for trajectory integration.
struct FieldSeries {
  Grid1D grid;
  HamiltonianSpec hamiltonian;
  std::vector<double> times;
  std::vector<RealVector> velocity;
  std::vector<RealVector> local_energy;
  std::vector<RealVector> dvq_dt;
  RealVector initial_density;
  RealVector final_density;

  double t_start() const { return times.front(); }
  double t_end() const { return times.back(); }
  double spacing() const { return times[1] - times[0]; }
  std::size_t size() const { return times.size(); }
};

/// Fields at snapshot k shifted in time by `offset` (0 or +-probe_dt).
using FieldSampler = std::function<BohmFields(std::size_t k, double offset)>;

inline constexpr double kDefaultProbeDt = 1e-3;

/// Builds a series on `times` (uniform, at least two entries). dV_Q/dt comes from a
/// centered difference of the sampler at +-probe_dt.
FieldSeries build_field_series(const std::vector<double>& times, const FieldSampler& sampler,
                               const HamiltonianSpec& h, double probe_dt = kDefaultProbeDt,
                               std::size_t threads = 1);

/// Numeric source: snapshot states, with the +-probe_dt states from a Strang sub-step.
/// probe_dt = 0 selects the series' own propagation step (or kDefaultProbeDt if unknown):
/// a sub-step of any other size samples a slightly different discrete flow, and that
/// mismatch dominates dV_Q/dt near nodes.
FieldSeries field_series_from_snapshots(const SnapshotSeries& snapshots, const HamiltonianSpec& h,
                                        const FieldOptions& options = {}, double probe_dt = 0.0,
                                        std::size_t threads = 1);

/// Analytic source: any exact state as a function of time, sampled on a grid.
using ExactState = std::function<WaveFunction(double t)>;
FieldSeries field_series_from_exact(const ExactState& state, const std::vector<double>& times,
                                    const HamiltonianSpec& h, const FieldOptions& options = {},
                                    double probe_dt = kDefaultProbeDt, std::size_t threads = 1);

/// Uniform time grid of n_intervals + 1 points on [t0, t1].
std::vector<double> uniform_times(double t0, double t1, std::size_t n_intervals);

struct Trajectory {
  std::size_t sample = 0;
  double x0 = 0.0;
  std::vector<double> times;
  std::vector<double> positions;
  std::vector<double> energies;
  std::vector<double> work_partial;
  double work_integral = 0.0;
  double work_endpoint = 0.0;
  double weight = 1.0;

  double x_final() const { return positions.back(); }
};

struct IntegrationOptions {
  /// RK4 step; the step actually used divides the protocol evenly and is <= ode_dt.
  double ode_dt = 0.0;
  /// Record every record_stride-th step plus both endpoints; 0 records endpoints only.
  std::size_t record_stride = 64;
};

/// Throws ValidationError unless 0 < ode_dt <= snapshot spacing <= 4 ode_dt.
void validate_integration(const FieldSeries& series, const IntegrationOptions& options);

/// RK4 on dx/dt = v(x, t) with cubic-in-space, linear-in-time interpolation;
/// work accumulates by Simpson's rule on the power
/// -x f1'(t) - p f2'(t) + dV_Q/dt, p = m (dx/dt + f2(t)).
/// Throws DomainError when the stencil leaves the grid interior and
/// NodeCollisionError on an invalid field value.
Trajectory integrate_trajectory(double x0, const FieldSeries& series, const IntegrationOptions& options);

struct TrajectorySpec {
  std::size_t n_samples = 1;
  std::uint64_t rng_seed = 0;
  IntegrationOptions integration;
  /// Failed members tolerated before the run aborts.
  std::size_t failure_budget = 0;
  std::size_t threads = 1;
};

struct TrajectoryFailure {
  std::size_t sample = 0;
  double x0 = 0.0;
  std::string kind;
  std::string message;
};

struct EnsembleResult {
  /// Successful members in sample order.
  std::vector<Trajectory> trajectories;
  std::vector<TrajectoryFailure> failures;
  std::size_t node_collisions = 0;
  std::size_t domain_exits = 0;
};

/// Integrates trajectories from given starting points. Failures beyond the
/// budget raise EnsembleError carrying the lowest failing sample index.
EnsembleResult integrate_positions(const std::vector<double>& x0, const FieldSeries& series,
                                   const IntegrationOptions& options, std::size_t failure_budget = 0,
                                   std::size_t threads = 1);

/// Samples n_samples starting points from the series' initial density and integrates them.
EnsembleResult run_ensemble(const TrajectorySpec& spec, const FieldSeries& series);

}  // namespace bohmwork
