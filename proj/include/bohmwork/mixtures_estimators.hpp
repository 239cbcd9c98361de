#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohmwork/grid.hpp"
#include "bohmwork/osc_analytic.hpp"
#include "bohmwork/propagator.hpp"
#include "bohmwork/qhj_fields.hpp"
#include "bohmwork/trajectories.hpp"

namespace bohmwork {

enum class MixtureKind { PureEigenstate, PureCoherent, ThermalEigenstates, ThermalCoherent, TwoLevelWell };
enum class Engine { Analytic, Numeric };

std::string to_string(MixtureKind kind);
std::string to_string(Engine engine);
/// Throws ValidationError for an unknown name.
MixtureKind parse_mixture_kind(const std::string& name);
Engine parse_engine(const std::string& name);

/// Thermal tail mass allowed beyond the last retained level.
inline constexpr double kThermalTailBound = 1e-8;

struct MixtureSpec {
  MixtureKind kind = MixtureKind::PureEigenstate;
  OscillatorParams oscillator;
  /// PureEigenstate level.
  int n = 0;
  /// PureCoherent label.
  Complex eta{0.0, 0.0};
  /// Thermal mixtures.
  double beta = 1.0;
  /// ThermalEigenstates cutoff; negative selects the smallest cutoff meeting the tail bound.
  int n_max = -1;
  /// ThermalCoherent label count; 0 lets the analytic engine draw one label per sample.
  std::size_t n_eta_samples = 0;
  /// TwoLevelWell superposition; the protocol is one beat period of the undriven well.
  TwoLevelWellState well;

  void validate() const;
};

nlohmann::json to_json(const MixtureSpec& spec);

/// Smallest n_max whose thermal tail sum_{n > n_max} p_n = e^{-(n_max+1) beta hbar omega} is below `tail`.
int thermal_n_max(const OscillatorParams& p, double beta, double tail = kThermalTailBound);

/// p_n = (1 - e^{-beta hbar omega}) e^{-n beta hbar omega} for n <= n_max, renormalized.
/// n_max < 0 picks thermal_n_max. Throws TruncationError if the discarded tail is >= 1e-8.
std::vector<double> thermal_weights(const OscillatorParams& p, double beta, int n_max = -1);

/// Per-component standard deviation of the thermal label distribution, sqrt(1 / (2 (e^{beta hbar omega} - 1))).
double coherent_label_sigma(const OscillatorParams& p, double beta);

/// eta_j = alpha + sigma (xi_R + i xi_I) with standard normals from stream (seed, kCoherentLabel, j).
/// The same seed gives the same xi at every beta.
std::vector<Complex> sample_coherent_labels(const OscillatorParams& p, double beta, std::size_t n,
                                            std::uint64_t seed);

struct WorkSample {
  double work = 0.0;
  /// Endpoint local-energy difference of the same trajectory.
  double work_endpoint = 0.0;
  double weight = 0.0;
  std::size_t stratum = 0;
  double x0 = 0.0;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<double> masses;
};

struct WorkDistribution {
  std::vector<WorkSample> samples;
  /// Mixture weight of each stratum.
  std::vector<double> stratum_weights;
  /// True when strata are random label draws (the coherent mixture): uncertainties
  /// then come from the spread of stratum means rather than within-stratum spread.
  bool random_strata = false;
  Histogram histogram;
  double n_effective = 0.0;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct ExpWorkEstimate {
  double beta = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  /// Set when the top 1% of samples by contribution carry more than half of the estimator mass.
  bool tail_flag = false;
  double top_share = 0.0;
};

/// Bin count 0 selects Freedman-Diaconis, capped at 1000 bins.
Histogram make_histogram(const std::vector<WorkSample>& samples, std::size_t n_bins = 0);

/// Fills histogram and n_effective; throws ValidationError if weights are negative
/// or do not sum to 1 within 1e-12.
void finalize_distribution(WorkDistribution& d, std::size_t n_bins = 0);

/// Weighted mean with its stratified standard error. Throws DegenerateStateError
/// when n_effective < 2.
Estimate mean_work(const WorkDistribution& d);
ExpWorkEstimate exp_work(const WorkDistribution& d, double beta);
/// Largest absolute difference of the two weighted empirical CDFs.
double ks_distance(const WorkDistribution& a, const WorkDistribution& b);

/// Grid, propagation and integration settings for the numeric engine.
struct NumericSetup {
  Grid1D grid{-12.0, 12.0, 2048};
  std::size_t n_steps = 4096;
  std::size_t snapshot_stride = 4;
  /// RK4 step; 0 selects the propagation step.
  double ode_dt = 0.0;
  FieldOptions fields;

  /// ode_dt, or tau / n_steps when ode_dt is 0.
  double resolved_ode_dt(double tau) const;
};

struct SamplingOptions {
  /// Trajectory budget across all strata.
  std::size_t n_samples = 10000;
  /// Minimum samples per retained eigen stratum.
  std::size_t stratum_floor = 100;
  std::uint64_t seed = 0;
  std::size_t failure_budget = 0;
  std::size_t threads = 1;
  /// Keep trajectories of the first keep_trajectories samples (numeric engine only).
  std::size_t keep_trajectories = 0;
  std::size_t record_stride = 64;
  /// Keep the snapshot series of the first propagated stratum (numeric engine only).
  bool keep_snapshots = false;
};

struct MixtureDiagnostics {
  std::size_t node_collisions = 0;
  std::size_t domain_exits = 0;
  double max_norm_drift = 0.0;
  double work_consistency_max = 0.0;
  /// Samples with |work_integral - work_endpoint| above 1e-3.
  std::size_t work_consistency_violations = 0;
  std::size_t n_strata = 0;
};

struct MixtureRun {
  WorkDistribution distribution;
  MixtureDiagnostics diagnostics;
  std::vector<Trajectory> trajectories;
  std::optional<SnapshotSeries> snapshots;
};

/// Per-stratum sample counts: max(floor, round(budget p_h)). Throws AllocationError
/// if the budget cannot cover the floor of every stratum.
std::vector<std::size_t> allocate_strata(const std::vector<double>& weights, std::size_t budget,
                                         std::size_t floor);

/// Coverage rule for the numeric engine: every stratum state, including its drift over
/// [0, tau], must stay three cells inside the grid with half-width sqrt((2n+1) hbar/m omega)
/// + 3 sigma0 (eigenstates) or 4 sigma0 (coherent states), and the grid must resolve its
/// wavenumbers. Thermal coherent labels are the ones drawn from `seed`. Throws ValidationError.
void check_domain_coverage(const MixtureSpec& spec, const NumericSetup& setup, std::uint64_t seed);

/// Stratified work distribution of a mixture. Positions within a stratum come from
/// jittered quantiles u = (i + U_i) / n_h. The analytic engine uses the closed forms for
/// the oscillator and exact fields for the well; the numeric engine propagates every
/// stratum state on setup.grid and integrates trajectories.
MixtureRun mixture_work_distribution(const MixtureSpec& spec, Engine engine, const SamplingOptions& sampling,
                                     const NumericSetup& setup = {});

/// {spec, engine, n_samples, mean_W, stderr_mean, exp_work, histogram}.
nlohmann::json distribution_report(const MixtureSpec& spec, Engine engine, const WorkDistribution& d,
                                   double beta);
/// CSV `bin_lo,bin_hi,mass` with 17 significant digits.
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);

}  // namespace bohmwork
