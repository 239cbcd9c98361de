#include "bohmwork/grid.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bohmwork/errors.hpp"

namespace bohmwork {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points) {
  if (!(std::isfinite(x_min) && std::isfinite(x_max)) || !(x_max > x_min)) {
    std::ostringstream msg;
    msg << "grid requires x_max > x_min (got [" << x_min << ", " << x_max << "])";
    throw ValidationError(msg.str());
  }
  if (n_points < 16 || !std::has_single_bit(n_points)) {
    throw ValidationError("grid n_points must be a power of two >= 16 (got " +
                          std::to_string(n_points) + ")");
  }
  dx_ = (x_max - x_min) / static_cast<double>(n_points);
  dk_ = 2.0 * std::numbers::pi / (static_cast<double>(n_points) * dx_);
}

double Grid1D::k(std::size_t i) const {
  const auto n = static_cast<long long>(n_);
  auto j = static_cast<long long>(i);
  if (j >= n / 2) j -= n;
  return static_cast<double>(j) * dk_;
}

RealVector Grid1D::positions() const {
  RealVector out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = x(i);
  return out;
}

RealVector Grid1D::wavenumbers() const {
  RealVector out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = k(i);
  return out;
}

WaveFunction::WaveFunction(Grid1D g, ComplexVector v, double t)
    : grid(std::move(g)), values(std::move(v)), time(t) {
  if (values.size() != grid.size()) {
    throw ValidationError("wave function has " + std::to_string(values.size()) +
                          " values for a grid of " + std::to_string(grid.size()));
  }
}

WaveFunction WaveFunction::normalized(Grid1D g, ComplexVector v, double t) {
  WaveFunction psi(std::move(g), std::move(v), t);
  psi.renormalize();
  return psi;
}

double WaveFunction::norm_squared() const {
  double s = 0.0;
  for (const auto& z : values) s += std::norm(z);
  return s * grid.dx();
}

void WaveFunction::renormalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw DegenerateStateError("cannot normalize a zero or non-finite wave function");
  }
  const double scale = 1.0 / std::sqrt(n2);
  for (auto& z : values) z *= scale;
}

void require_normalized(const WaveFunction& psi, double tol) {
  const double n2 = psi.norm_squared();
  if (!(n2 > 0.0)) throw DegenerateStateError("wave function is identically zero");
  if (!std::isfinite(n2) || std::abs(n2 - 1.0) > tol) {
    std::ostringstream msg;
    msg << "wave function not normalized: norm^2 = " << n2;
    throw NormalizationError(msg.str());
  }
}

Complex inner_product(const WaveFunction& a, const WaveFunction& b) {
  if (!(a.grid == b.grid)) throw ValidationError("inner product of states on different grids");
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s * a.grid.dx();
}

}  // namespace bohmwork
