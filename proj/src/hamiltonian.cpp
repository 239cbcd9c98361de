#include "bohmwork/hamiltonian.hpp"

#include <cmath>

#include "bohmwork/errors.hpp"

namespace bohmwork {

void HamiltonianSpec::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("hamiltonian mass must be > 0");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ValidationError("hamiltonian hbar must be > 0");
  if (!potential || !f1 || !f2 || !df1 || !df2) {
    throw ValidationError("hamiltonian requires potential, f1, f2 and their derivatives");
  }
  if (!(energy_scale >= 0.0)) throw ValidationError("hamiltonian energy_scale must be >= 0");
}

RealVector HamiltonianSpec::sample_potential(const Grid1D& grid) const {
  RealVector v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = potential(grid.x(i));
  return v;
}

HamiltonianSpec free_particle(double mass, double hbar) {
  HamiltonianSpec h;
  h.mass = mass;
  h.hbar = hbar;
  h.potential = [](double) { return 0.0; };
  const auto zero = [](double) { return 0.0; };
  h.f1 = zero;
  h.f2 = zero;
  h.df1 = zero;
  h.df2 = zero;
  return h;
}

}  // namespace bohmwork
