#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace bohmwork {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;
using RealVector = std::vector<double>;

/// Uniform periodic grid. Nodes are x_min + i*dx for i in [0, n_points);
/// x_max is the periodic image of x_min and is not itself a node.
class Grid1D {
 public:
  /// Throws ValidationError unless n_points >= 16 is a power of two and
  /// x_max > x_min.
  Grid1D(double x_min, double x_max, std::size_t n_points);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double dx() const { return dx_; }
  double dk() const { return dk_; }
  double length() const { return x_max_ - x_min_; }

  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
  /// Angular wavenumber of FFT bin i in standard (unshifted) ordering.
  double k(std::size_t i) const;

  RealVector positions() const;
  RealVector wavenumbers() const;

  bool operator==(const Grid1D& other) const = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
  double dk_;
};

/// Sampled wave function psi(x, t). Values are not forced to be normalized on
/// construction; operations that need it call require_normalized().
struct WaveFunction {
  Grid1D grid;
  ComplexVector values;
  double time = 0.0;

  WaveFunction(Grid1D g, ComplexVector v, double t);

  /// Rescales values so that sum |psi|^2 dx == 1. Throws DegenerateStateError
  /// for an all-zero state.
  static WaveFunction normalized(Grid1D g, ComplexVector v, double t);

  double norm_squared() const;
  void renormalize();
};

inline constexpr double kNormTolerance = 1e-8;

/// Throws DegenerateStateError for all-zero states and NormalizationError when
/// |norm^2 - 1| exceeds tol.
void require_normalized(const WaveFunction& psi, double tol = kNormTolerance);

/// <a|b> = sum conj(a) b dx. Grids must match.
Complex inner_product(const WaveFunction& a, const WaveFunction& b);

}  // namespace bohmwork
