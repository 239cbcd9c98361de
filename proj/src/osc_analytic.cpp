#include "bohmwork/osc_analytic.hpp"

#include <cmath>
#include <numbers>

#include "bohmwork/errors.hpp"

namespace bohmwork {

namespace {

constexpr double kPi = std::numbers::pi;

double coth(double x) { return 1.0 / std::tanh(x); }

// (m w / hbar)^{1/4}, the scale turning hermite_function(xi) into a density amplitude in x.
double amplitude_scale(const OscillatorParams& p) { return std::pow(p.m * p.omega / p.hbar, 0.25); }

double xi_of(const OscillatorParams& p, double x) { return std::sqrt(p.m * p.omega / p.hbar) * x; }

// <x| D(delta) |n> with D(delta) = exp(i p0 x/hbar - i x0 p0/(2 hbar)) T(x0).
Complex displaced_amplitude(const OscillatorParams& p, int n, Complex delta, double x) {
  const double x0 = p.length_unit() * delta.real();
  const double p0 = std::sqrt(2.0 * p.hbar * p.m * p.omega) * delta.imag();
  const double phase = (p0 * x - 0.5 * x0 * p0) / p.hbar;
  const double mag = amplitude_scale(p) * hermite_function(n, xi_of(p, x - x0));
  return std::polar(mag, phase);
}

}  // namespace

void OscillatorParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(m)) throw ValidationError("oscillator m must be > 0");
  if (!positive(omega)) throw ValidationError("oscillator omega must be > 0");
  if (!positive(hbar)) throw ValidationError("oscillator hbar must be > 0");
  if (!positive(tau)) throw ValidationError("oscillator tau must be > 0");
  if (!std::isfinite(A) || A < 0.0) throw ValidationError("oscillator A must be >= 0");
}

Complex OscillatorParams::alpha() const {
  return {0.0, -A / std::sqrt(2.0 * hbar * m * omega * omega * omega)};
}

double OscillatorParams::sigma0() const { return std::sqrt(hbar / (2.0 * m * omega)); }

double OscillatorParams::length_unit() const { return std::sqrt(2.0 * hbar / (m * omega)); }

double OscillatorParams::mean_work() const { return (A * tau) * (A * tau) / (2.0 * m); }

HamiltonianSpec driven_oscillator(const OscillatorParams& p) {
  p.validate();
  HamiltonianSpec h;
  h.mass = p.m;
  h.hbar = p.hbar;
  const double m = p.m, w = p.omega, A = p.A;
  h.potential = [m, w](double x) { return 0.5 * m * w * w * x * x; };
  h.f1 = [A, w](double t) { return -A * std::sin(w * t); };
  h.f2 = [A, m, w](double t) { return -(A / (m * w)) * std::cos(w * t); };
  h.df1 = [A, w](double t) { return -A * w * std::cos(w * t); };
  h.df2 = [A, m, w](double t) { return (A / m) * std::sin(w * t); };
  h.energy_scale = w;
  return h;
}

double hermite_function(int n, double xi) {
  if (n < 0) throw ValidationError("Hermite index must be >= 0");
  double prev = 0.0;
  double cur = std::pow(kPi, -0.25) * std::exp(-0.5 * xi * xi);
  for (int k = 0; k < n; ++k) {
    const double next = std::sqrt(2.0 / (k + 1)) * xi * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

RealVector hermite_functions(int n_max, double xi) {
  if (n_max < 0) throw ValidationError("Hermite index must be >= 0");
  RealVector out(static_cast<std::size_t>(n_max) + 1);
  out[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * xi * xi);
  if (n_max >= 1) out[1] = std::sqrt(2.0) * xi * out[0];
  for (int k = 1; k < n_max; ++k) {
    out[k + 1] = std::sqrt(2.0 / (k + 1)) * xi * out[k] - std::sqrt(static_cast<double>(k) / (k + 1)) * out[k - 1];
  }
  return out;
}

double eigen_phase(const OscillatorParams& p, int n, double x, double t) {
  const double w = p.omega, A = p.A, m = p.m;
  const double wt = w * t;
  return -p.hbar * w * (n + 0.5) * t + A * A * t / (2.0 * m * w * w) -
         (A / w) * x * (std::cos(wt) + wt * std::sin(wt)) +
         A * A / (4.0 * m * w * w * w) * (2.0 * wt * std::cos(2.0 * wt) + (wt * wt - 1.0) * std::sin(2.0 * wt));
}

double eigen_trajectory(const OscillatorParams& p, double x0, double t) {
  const double wt = p.omega * t;
  return x0 + p.A / (p.m * p.omega * p.omega) * (wt * std::cos(wt) - std::sin(wt));
}

double eigen_work(const OscillatorParams& p, double x0) {
  const double At = p.A * p.tau;
  return At * (At + 2.0 * p.m * x0 * p.omega * std::cos(p.omega * p.tau)) / (2.0 * p.m);
}

double eigen_local_energy(const OscillatorParams& p, int n, double x, double t) {
  const double w = p.omega, A = p.A, m = p.m;
  const double wt = w * t;
  return p.hbar * w * (n + 0.5) - A * A / (2.0 * m * w * w) + A * wt * x * std::cos(wt) -
         A * A / (2.0 * m * w * w) * (wt * wt * std::cos(2.0 * wt) - wt * std::sin(2.0 * wt));
}

double eigen_initial_density(const OscillatorParams& p, int n, double x0) {
  const double a = amplitude_scale(p) * hermite_function(n, xi_of(p, x0));
  return a * a;
}

Complex eigen_displacement(const OscillatorParams& p, double t) {
  const double wt = p.omega * t;
  return p.alpha() * Complex{1.0, wt} * std::polar(1.0, -wt);
}

WaveFunction displaced_number_state(const OscillatorParams& p, int n, double t, const Grid1D& grid) {
  p.validate();
  if (n < 0) throw ValidationError("eigenstate label must be >= 0");
  const Complex delta = eigen_displacement(p, t);
  const double global = p.A * p.A * t / (2.0 * p.hbar * p.m * p.omega * p.omega) - p.omega * (n + 0.5) * t;
  const Complex g = std::polar(1.0, global);
  ComplexVector v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = g * displaced_amplitude(p, n, delta, grid.x(i));
  return WaveFunction(grid, std::move(v), t);
}

double coherent_phase(const OscillatorParams& p, Complex eta, double x, double t) {
  const double w = p.omega, A = p.A, hb = p.hbar;
  const double wt = w * t;
  const double s = std::sqrt(2.0 * hb * p.m * w);
  const double eR = eta.real(), eI = eta.imag();
  const double u = eR + A * t / s;
  return -0.5 * hb * wt + hb * A * t * eI / s -
         x * ((A * t + eR * s) * std::sin(wt) - eI * s * std::cos(wt)) -
         hb * u * eI * std::cos(2.0 * wt) + 0.5 * hb * (u * u - eI * eI) * std::sin(2.0 * wt);
}

double coherent_trajectory(const OscillatorParams& p, Complex eta, double x0, double t) {
  const double wt = p.omega * t;
  const double l = p.length_unit();
  return x0 - eta.real() * l + (p.A * t / (p.m * p.omega) + eta.real() * l) * std::cos(wt) +
         eta.imag() * l * std::sin(wt);
}

double coherent_work(const OscillatorParams& p, Complex eta, double x0) {
  const double w = p.omega, A = p.A, m = p.m, hb = p.hbar, tau = p.tau;
  const double wt = w * tau;
  const double eR = eta.real(), eI = eta.imag();
  const double first = A * tau * (A * tau / (2.0 * m) + std::sqrt(2.0 * hb * w / m) * eR);
  const double brace = A * (wt * std::cos(wt) + std::sin(wt)) +
                       std::sqrt(2.0 * hb * m * w * w * w) * (eR * (std::cos(wt) - 1.0) + eI * std::sin(wt));
  return first + brace * (x0 - eR * p.length_unit());
}

Complex coherent_amplitude(const OscillatorParams& p, Complex eta, double t) {
  const double c = p.A / std::sqrt(2.0 * p.hbar * p.m * p.omega);
  return (eta + c * t) * std::polar(1.0, -p.omega * t);
}

double coherent_local_energy(const OscillatorParams& p, Complex eta, double x, double t) {
  const double w = p.omega, hb = p.hbar;
  const double c = p.A / std::sqrt(2.0 * hb * p.m * w);
  const Complex z = coherent_amplitude(p, eta, t);
  const Complex zdot = Complex{0.0, -w} * z + c * std::polar(1.0, -w * t);
  const double xs = p.length_unit();
  const double ps = std::sqrt(2.0 * hb * p.m * w);
  const double xc = xs * z.real(), pc = ps * z.imag();
  const double xc_dot = xs * zdot.real(), pc_dot = ps * zdot.imag();
  // S = hbar phi(t) + pc x - xc pc / 2 with phi = -w t/2 - c eta_I t.
  return 0.5 * hb * w + hb * c * eta.imag() - pc_dot * x + 0.5 * (xc_dot * pc + xc * pc_dot);
}

double coherent_initial_density(const OscillatorParams& p, Complex eta, double x0) {
  const double center = eta.real() * p.length_unit();
  const double k = p.m * p.omega / p.hbar;
  return std::sqrt(k / kPi) * std::exp(-k * (x0 - center) * (x0 - center));
}

WaveFunction coherent_state(const OscillatorParams& p, Complex eta, double t, const Grid1D& grid) {
  p.validate();
  if (!std::isfinite(eta.real()) || !std::isfinite(eta.imag())) {
    throw ValidationError("coherent amplitude must be finite");
  }
  const double c = p.A / std::sqrt(2.0 * p.hbar * p.m * p.omega);
  const Complex z = coherent_amplitude(p, eta, t);
  const Complex g = std::polar(1.0, -0.5 * p.omega * t - c * eta.imag() * t);
  ComplexVector v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = g * displaced_amplitude(p, 0, z, grid.x(i));
  return WaveFunction(grid, std::move(v), t);
}

double exp_work_eigenmixture(const OscillatorParams& p, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
  const double wt = p.omega * p.tau;
  const double h = 0.5 * p.hbar * p.omega * beta;
  const double c2 = std::cos(wt) * std::cos(wt);
  return std::exp(-(p.A * p.A * p.tau * p.tau * beta / (2.0 * p.m)) * (1.0 - h * c2 * coth(h)));
}

HighTemperatureValue exp_work_eigenmixture_highT(const OscillatorParams& p, double beta) {
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  const double s = std::sin(p.omega * p.tau);
  return {1.0 - beta * p.mean_work() * s * s, beta * p.hbar * p.omega <= 0.3};
}

HighTemperatureValue exp_work_coherent_highT(const OscillatorParams& p, double beta) {
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  const double s = std::sin(0.5 * p.omega * p.tau);
  return {1.0 + beta * p.hbar * p.omega * s * s, beta * p.hbar * p.omega <= 0.3};
}

void TwoLevelWellState::validate() const {
  if (!(L > 0.0) || !(m > 0.0) || !(hbar > 0.0)) throw ValidationError("well requires L, m, hbar > 0");
  const double n2 = std::norm(c0) + std::norm(c1);
  if (std::abs(n2 - 1.0) > 1e-12) throw NormalizationError("well coefficients must satisfy |c0|^2 + |c1|^2 = 1");
}

double TwoLevelWellState::energy(int k) const {
  const double q = kPi * (k + 1) / L;
  return hbar * hbar * q * q / (2.0 * m);
}

double TwoLevelWellState::period() const { return 2.0 * kPi * hbar / (energy(1) - energy(0)); }

HamiltonianSpec two_level_well_hamiltonian(const TwoLevelWellState& s) {
  s.validate();
  return free_particle(s.m, s.hbar);
}

namespace {

// Evaluates sum_k c_k e^{-i E_k t/hbar} q_k^j d^j/dx^j sin(q_k x) for j = 0, 1, 2.
void well_series(const TwoLevelWellState& s, double t, const Grid1D& grid, ComplexVector* f,
                 ComplexVector* d1, ComplexVector* d2) {
  s.validate();
  const double norm = std::sqrt(2.0 / s.L);
  const Complex a0 = s.c0 * std::polar(norm, -s.energy(0) * t / s.hbar);
  const Complex a1 = s.c1 * std::polar(norm, -s.energy(1) * t / s.hbar);
  const double q0 = kPi / s.L, q1 = 2.0 * kPi / s.L;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const bool inside = x >= 0.0 && x <= s.L;
    if (f) (*f)[i] = inside ? a0 * std::sin(q0 * x) + a1 * std::sin(q1 * x) : 0.0;
    if (d1) (*d1)[i] = inside ? a0 * q0 * std::cos(q0 * x) + a1 * q1 * std::cos(q1 * x) : 0.0;
    if (d2) (*d2)[i] = inside ? -a0 * q0 * q0 * std::sin(q0 * x) - a1 * q1 * q1 * std::sin(q1 * x) : 0.0;
  }
}

}  // namespace

WaveFunction two_level_well_wavefunction(const TwoLevelWellState& s, double t, const Grid1D& grid) {
  ComplexVector v(grid.size());
  well_series(s, t, grid, &v, nullptr, nullptr);
  return WaveFunction(grid, std::move(v), t);
}

void two_level_well_derivatives(const TwoLevelWellState& s, double t, const Grid1D& grid,
                                ComplexVector& d1, ComplexVector& d2) {
  d1.assign(grid.size(), 0.0);
  d2.assign(grid.size(), 0.0);
  well_series(s, t, grid, nullptr, &d1, &d2);
}

}  // namespace bohmwork
