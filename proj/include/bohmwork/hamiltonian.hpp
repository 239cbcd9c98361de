#pragma once

#include <functional>

#include "bohmwork/grid.hpp"

namespace bohmwork {

using TimeFunction = std::function<double(double)>;
using PotentialFunction = std::function<double(double)>;

/// H = p^2/2m + V(x) - x f1(t) - p f2(t).
///
/// The drives carry their analytic time derivatives, which the work integrand
/// needs. energy_scale bounds the propagation step (dt <= 0.05/energy_scale);
/// zero disables the bound.
struct HamiltonianSpec {
  double mass = 1.0;
  double hbar = 1.0;
  PotentialFunction potential;
  TimeFunction f1;
  TimeFunction f2;
  TimeFunction df1;
  TimeFunction df2;
  double energy_scale = 0.0;

  /// Throws ValidationError unless mass > 0, hbar > 0 and all callables are set.
  void validate() const;

  RealVector sample_potential(const Grid1D& grid) const;
};

/// V = 0, no drives.
HamiltonianSpec free_particle(double mass, double hbar);

}  // namespace bohmwork
