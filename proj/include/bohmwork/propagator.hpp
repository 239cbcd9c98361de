#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "bohmwork/grid.hpp"
#include "bohmwork/hamiltonian.hpp"
#include "bohmwork/spectral.hpp"

namespace bohmwork {

struct PropagationPlan {
  HamiltonianSpec hamiltonian;
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t n_steps = 1;
  std::size_t snapshot_stride = 1;

  double dt() const { return (t_end - t_start) / static_cast<double>(n_steps); }
  /// Throws ValidationError or StepSizeError. The stride must divide n_steps so
  /// that t_end is always recorded.
  void validate() const;
};

/// Largest step allowed for a Hamiltonian: 0.05 / energy_scale, or infinity.
double max_step(const HamiltonianSpec& h);

/// Reusable Strang stepper for one grid and Hamiltonian.
class Propagator {
 public:
  Propagator(const Grid1D& grid, HamiltonianSpec h);

  /// One Strang step of size dt (negative allowed) starting at psi.time, in place.
  void step(WaveFunction& psi, double dt) const;

  const Grid1D& grid() const { return spectral_.grid(); }
  const HamiltonianSpec& hamiltonian() const { return h_; }

 private:
  Spectral spectral_;
  HamiltonianSpec h_;
  RealVector potential_;
};

/// Single step from time t; checks the step bound.
WaveFunction step(const WaveFunction& psi, const HamiltonianSpec& h, double t, double dt);

struct SnapshotSeries {
  Grid1D grid;
  std::vector<double> times;
  std::vector<WaveFunction> states;
  /// Number of snapshots whose norm drifted past 1e-10 and were rescaled.
  std::size_t renormalizations = 0;
  /// Largest |norm^2 - 1| seen before any rescaling.
  double max_norm_drift = 0.0;
  /// Propagation step that produced the series; 0 when unknown.
  double step_dt = 0.0;

  std::size_t size() const { return states.size(); }
};

inline constexpr double kRenormalizeThreshold = 1e-10;

SnapshotSeries propagate(const WaveFunction& psi0, const PropagationPlan& plan);

/// JSON header line {"grid": {...}, "times": [...]} followed by little-endian
/// f64 (re, im) pairs, snapshot-major.
void write_snapshots(const std::filesystem::path& path, const SnapshotSeries& series);
SnapshotSeries read_snapshots(const std::filesystem::path& path);

}  // namespace bohmwork
