#pragma once

#include <memory>
#include <span>

#include "bohmwork/grid.hpp"

namespace bohmwork {

enum class DerivativeMethod { Spectral, FiniteDifference4 };

struct FftPlanPair;

/// FFT-based operations on one grid. Plans are shared per grid size and are
/// executed through the thread-safe new-array interface, so a Spectral object
/// can be used concurrently once constructed.
class Spectral {
 public:
  explicit Spectral(const Grid1D& grid);

  const Grid1D& grid() const { return grid_; }
  const RealVector& wavenumbers() const { return k_; }

  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  /// Inverse transform including the 1/n factor.
  void backward(std::span<const Complex> in, std::span<Complex> out) const;

  /// d^order f / dx^order of a periodic function.
  ComplexVector derivative(std::span<const Complex> f, int order) const;
  /// First and second derivatives from a single forward transform.
  void first_and_second(std::span<const Complex> f, ComplexVector& d1, ComplexVector& d2) const;

 private:
  Grid1D grid_;
  RealVector k_;
  std::shared_ptr<const FftPlanPair> plans_;
};

/// Fourth-order central differences with periodic wrap.
ComplexVector fd4_first(std::span<const Complex> f, double dx);
ComplexVector fd4_second(std::span<const Complex> f, double dx);

/// Dispatches to spectral or finite-difference derivatives.
void derivatives(const Spectral& spectral, DerivativeMethod method, std::span<const Complex> f,
                 ComplexVector& d1, ComplexVector& d2);

}  // namespace bohmwork
