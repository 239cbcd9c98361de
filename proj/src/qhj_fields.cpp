#include "bohmwork/qhj_fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bohmwork/errors.hpp"

namespace bohmwork {

namespace {

struct Derivs {
  ComplexVector d1;
  ComplexVector d2;
};

Derivs spatial_derivatives(const WaveFunction& psi, DerivativeMethod method) {
  Derivs d;
  const Spectral spectral(psi.grid);
  derivatives(spectral, method, psi.values, d.d1, d.d2);
  return d;
}

double node_floor(const RealVector& density, double ratio) {
  const double peak = *std::max_element(density.begin(), density.end());
  return ratio * peak;
}

RealVector density_of(const WaveFunction& psi) {
  RealVector rho(psi.values.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(psi.values[i]);
  return rho;
}

}  // namespace

double invalid_field_value() { return std::numeric_limits<double>::quiet_NaN(); }

RealVector born_density(const WaveFunction& psi, double norm_tolerance) {
  require_normalized(psi, norm_tolerance);
  return density_of(psi);
}

ComplexVector apply_hamiltonian(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                                DerivativeMethod method) {
  h.validate();
  const Derivs d = spatial_derivatives(psi, method);
  const double kin = -h.hbar * h.hbar / (2.0 * h.mass);
  const Complex ihbar_f2{0.0, h.hbar * h.f2(t)};
  const double f1 = h.f1(t);
  ComplexVector out(psi.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = psi.grid.x(i);
    // -p f2 psi = i hbar f2 psi'.
    out[i] = kin * d.d2[i] + ihbar_f2 * d.d1[i] + (h.potential(x) - x * f1) * psi.values[i];
  }
  return out;
}

BohmFields compute_fields(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                          const FieldOptions& options) {
  require_normalized(psi, options.norm_tolerance);
  const Derivs d = spatial_derivatives(psi, options.method);
  return fields_from_derivatives(psi, d.d1, d.d2, h, t, options);
}

BohmFields fields_from_derivatives(const WaveFunction& psi, const ComplexVector& d1,
                                   const ComplexVector& d2, const HamiltonianSpec& h, double t,
                                   const FieldOptions& options) {
  h.validate();
  require_normalized(psi, options.norm_tolerance);
  if (d1.size() != psi.values.size() || d2.size() != psi.values.size()) {
    throw ValidationError("derivative arrays do not match the wave function size");
  }

  BohmFields f{psi.grid, t, density_of(psi), {}, {}, {}};
  const std::size_t n = psi.values.size();
  f.velocity.resize(n);
  f.quantum_potential.resize(n);
  f.local_energy.resize(n);

  const double floor = node_floor(f.density, options.node_floor_ratio);
  const double m = h.mass;
  const double hbar = h.hbar;
  const double f1 = h.f1(t);
  const double f2 = h.f2(t);
  const double nan = invalid_field_value();

  for (std::size_t i = 0; i < n; ++i) {
    if (!(f.density[i] >= floor) || f.density[i] == 0.0) {
      f.velocity[i] = nan;
      f.quantum_potential[i] = nan;
      f.local_energy[i] = nan;
      continue;
    }
    const Complex psi_i = psi.values[i];
    const Complex r1 = d1[i] / psi_i;
    const Complex r2 = d2[i] / psi_i;
    const double x = psi.grid.x(i);
    const double p = hbar * r1.imag();
    const double vq = -hbar * hbar / (2.0 * m) * r2.real() - p * p / (2.0 * m);
    f.velocity[i] = p / m - f2;
    f.quantum_potential[i] = vq;
    // Re(H psi / psi) = -(hbar^2/2m) Re(psi''/psi) - hbar f2 Im(psi'/psi) + V - x f1.
    f.local_energy[i] = -hbar * hbar / (2.0 * m) * r2.real() - f2 * p + h.potential(x) - x * f1;
  }
  return f;
}

RealVector velocity_field(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                          const FieldOptions& options) {
  return compute_fields(psi, h, t, options).velocity;
}

RealVector quantum_potential(const WaveFunction& psi, const HamiltonianSpec& h,
                             const FieldOptions& options) {
  return compute_fields(psi, h, psi.time, options).quantum_potential;
}

RealVector local_energy(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                        const FieldOptions& options) {
  return compute_fields(psi, h, t, options).local_energy;
}

double expectation_energy(const WaveFunction& psi, const HamiltonianSpec& h, double t) {
  require_normalized(psi);
  const ComplexVector hpsi = apply_hamiltonian(psi, h, t);
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < hpsi.size(); ++i) s += std::conj(psi.values[i]) * hpsi[i];
  return s.real() * psi.grid.dx();
}

}  // namespace bohmwork
