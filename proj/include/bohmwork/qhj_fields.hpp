#pragma once

#include "bohmwork/grid.hpp"
#include "bohmwork/hamiltonian.hpp"
#include "bohmwork/spectral.hpp"

namespace bohmwork {

struct FieldOptions {
  DerivativeMethod method = DerivativeMethod::Spectral;
  /// Nodes with density below node_floor_ratio * max density get the invalid sentinel.
  double node_floor_ratio = 1e-12;
  double norm_tolerance = kNormTolerance;
};

/// Sentinel written at density nodes. Test with std::isnan.
double invalid_field_value();

struct BohmFields {
  Grid1D grid;
  double time = 0.0;
  RealVector density;
  RealVector velocity;
  RealVector quantum_potential;
  RealVector local_energy;
};

/// |psi|^2 per node.
RealVector born_density(const WaveFunction& psi, double norm_tolerance = kNormTolerance);

/// hbar Im(conj(psi) psi') / (m |psi|^2) - f2(t).
RealVector velocity_field(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                          const FieldOptions& options = {});

/// -hbar^2 R'' / (2 m R), evaluated as -(hbar^2/2m) Re(psi''/psi) - p^2/2m with
/// p = hbar Im(psi'/psi). The two agree wherever R is smooth; the psi form
/// stays smooth across sign changes of real eigenfunctions where |psi| has a kink.
RealVector quantum_potential(const WaveFunction& psi, const HamiltonianSpec& h,
                             const FieldOptions& options = {});

/// (H psi)(x) with kinetic and p-linear parts applied through derivatives and the
/// potential and x-linear parts pointwise.
ComplexVector apply_hamiltonian(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                                DerivativeMethod method = DerivativeMethod::Spectral);

/// Re[(H psi)/psi].
RealVector local_energy(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                        const FieldOptions& options = {});

/// <psi|H(t)|psi>.
double expectation_energy(const WaveFunction& psi, const HamiltonianSpec& h, double t);

/// All fields from a single pair of derivative evaluations.
BohmFields compute_fields(const WaveFunction& psi, const HamiltonianSpec& h, double t,
                          const FieldOptions& options = {});

/// Fields from caller-supplied first and second derivatives, e.g. exact ones for
/// states with hard walls where spectral derivatives would ring.
BohmFields fields_from_derivatives(const WaveFunction& psi, const ComplexVector& d1,
                                   const ComplexVector& d2, const HamiltonianSpec& h, double t,
                                   const FieldOptions& options = {});

}  // namespace bohmwork
