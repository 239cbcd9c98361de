#pragma once

#include "bohmwork/grid.hpp"
#include "bohmwork/hamiltonian.hpp"

namespace bohmwork {

/// Driven oscillator H = p^2/2m + m w^2 x^2/2 - x f1(t) - p f2(t) with
/// f1 = -A sin(wt), f2 = -(A/mw) cos(wt), over t in [0, tau].
struct OscillatorParams {
  double m = 1.0;
  double omega = 1.0;
  double A = 1.0;
  double hbar = 1.0;
  double tau = 1.0;

  /// Throws ValidationError unless m, omega, hbar, tau > 0 and A >= 0.
  void validate() const;

  /// alpha = -i A / sqrt(2 hbar m omega^3).
  Complex alpha() const;
  /// Ground-state position spread sqrt(hbar / 2 m omega).
  double sigma0() const;
  /// sqrt(2 hbar / m omega): position of a unit coherent amplitude.
  double length_unit() const;
  /// Mean work (A tau)^2 / 2m shared by every thermal preparation.
  double mean_work() const;
};

HamiltonianSpec driven_oscillator(const OscillatorParams& p);

/// Normalized Hermite function phi_n(xi) = (2^n n! sqrt(pi))^{-1/2} H_n(xi) e^{-xi^2/2}
/// from the normalized three-term recurrence, so large n never overflows.
double hermite_function(int n, double xi);
/// phi_0 .. phi_{n_max} at xi in one pass.
RealVector hermite_functions(int n_max, double xi);

// Eigenstate preparation |n~_alpha>.

/// Phase S(x, t) of the evolved displaced number state.
double eigen_phase(const OscillatorParams& p, int n, double x, double t);
/// Bohmian trajectory; identical for every n.
double eigen_trajectory(const OscillatorParams& p, double x0, double t);
/// Work accumulated over [0, tau] by the trajectory starting at x0.
double eigen_work(const OscillatorParams& p, double x0);
/// Local energy -dS/dt.
double eigen_local_energy(const OscillatorParams& p, int n, double x, double t);
/// |psi_n(x0)|^2 at t = 0.
double eigen_initial_density(const OscillatorParams& p, int n, double x0);
/// Displacement amplitude of the Schroedinger-picture evolved state, alpha (1 + i w t) e^{-i w t}.
Complex eigen_displacement(const OscillatorParams& p, double t);
/// Exact evolved state e^{i A^2 t/(2 hbar m w^2)} e^{-i w (n+1/2) t} D(delta(t)) |n> on a grid.
WaveFunction displaced_number_state(const OscillatorParams& p, int n, double t, const Grid1D& grid);

// Coherent preparation |eta>.

/// Phase S(x, t) of the evolved coherent state in the published closed form. It
/// differs from the phase of coherent_state() by the global term 2 hbar c eta_I t,
/// c = A / sqrt(2 hbar m w), which moves no trajectory and cancels in every work value.
double coherent_phase(const OscillatorParams& p, Complex eta, double x, double t);
double coherent_trajectory(const OscillatorParams& p, Complex eta, double x0, double t);
double coherent_work(const OscillatorParams& p, Complex eta, double x0);
/// Local energy Re(H psi / psi) of the evolved coherent state.
double coherent_local_energy(const OscillatorParams& p, Complex eta, double x, double t);
double coherent_initial_density(const OscillatorParams& p, Complex eta, double x0);
/// Coherent amplitude at time t, (eta + c t) e^{-i w t}.
Complex coherent_amplitude(const OscillatorParams& p, Complex eta, double t);
WaveFunction coherent_state(const OscillatorParams& p, Complex eta, double t, const Grid1D& grid);

// Mixture closed forms.

/// <e^{-beta W}> for the thermal eigenstate mixture.
double exp_work_eigenmixture(const OscillatorParams& p, double beta);

struct HighTemperatureValue {
  double value = 1.0;
  /// False once beta hbar omega exceeds 0.3, where the first-order expansion is unreliable.
  bool valid = true;
};

/// First-order expansion of <e^{-beta W}> for the thermal eigenstate mixture.
HighTemperatureValue exp_work_eigenmixture_highT(const OscillatorParams& p, double beta);
/// First-order expansion of <e^{-beta W}> for the thermal coherent mixture; independent of A.
HighTemperatureValue exp_work_coherent_highT(const OscillatorParams& p, double beta);

// Two-level infinite well on [0, L].

struct TwoLevelWellState {
  double L = 1.0;
  Complex c0{1.0, 0.0};
  Complex c1{0.0, 0.0};
  double m = 1.0;
  double hbar = 1.0;

  /// Throws ValidationError for L, m, hbar <= 0 or |c0|^2 + |c1|^2 != 1 within 1e-12.
  void validate() const;
  /// E_k = hbar^2 pi^2 (k+1)^2 / (2 m L^2).
  double energy(int k) const;
  /// Beat period 2 pi hbar / (E1 - E0).
  double period() const;
};

/// Free particle inside the well; the wall is imposed by the support of psi.
HamiltonianSpec two_level_well_hamiltonian(const TwoLevelWellState& s);

/// psi(x, t) sampled on the grid, zero outside [0, L].
WaveFunction two_level_well_wavefunction(const TwoLevelWellState& s, double t, const Grid1D& grid);
/// Exact first and second spatial derivatives matching two_level_well_wavefunction.
void two_level_well_derivatives(const TwoLevelWellState& s, double t, const Grid1D& grid,
                                ComplexVector& d1, ComplexVector& d2);

}  // namespace bohmwork
