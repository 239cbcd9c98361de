#include "bohmwork/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "bohmwork/errors.hpp"

namespace bohmwork {

struct FftPlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::size_t n = 0;

  explicit FftPlanPair(std::size_t size) : n(size) {
    // Planner calls are not thread-safe; callers hold plan_mutex().
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    forward = fftw_plan_dft_1d(len, a, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward = fftw_plan_dft_1d(len, a, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    if (forward == nullptr || backward == nullptr) {
      throw NumericalError("FFTW failed to create a plan of size " + std::to_string(n));
    }
  }
  FftPlanPair(const FftPlanPair&) = delete;
  FftPlanPair& operator=(const FftPlanPair&) = delete;
  // Plans live in a process-wide cache and are released at static teardown.
  ~FftPlanPair() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }

  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }
};

namespace {

std::shared_ptr<const FftPlanPair> plans_for(std::size_t n) {
  static std::map<std::size_t, std::shared_ptr<const FftPlanPair>> cache;
  std::lock_guard lock(FftPlanPair::plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto p = std::make_shared<const FftPlanPair>(n);
  cache.emplace(n, p);
  return p;
}

fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

}  // namespace

Spectral::Spectral(const Grid1D& grid) : grid_(grid), k_(grid.wavenumbers()), plans_(plans_for(grid.size())) {}

void Spectral::forward(std::span<const Complex> in, std::span<Complex> out) const {
  fftw_execute_dft(plans_->forward, as_fftw(in.data()), as_fftw(out.data()));
}

void Spectral::backward(std::span<const Complex> in, std::span<Complex> out) const {
  fftw_execute_dft(plans_->backward, as_fftw(in.data()), as_fftw(out.data()));
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (auto& z : out) z *= inv_n;
}

ComplexVector Spectral::derivative(std::span<const Complex> f, int order) const {
  const std::size_t n = f.size();
  ComplexVector spec(n), out(n);
  forward(f, spec);
  for (std::size_t i = 0; i < n; ++i) {
    Complex ik{0.0, k_[i]};
    Complex factor{1.0, 0.0};
    for (int o = 0; o < order; ++o) factor *= ik;
    spec[i] *= factor;
  }
  // The Nyquist mode has no odd-derivative partner.
  if (order % 2 == 1) spec[n / 2] = 0.0;
  backward(spec, out);
  return out;
}

void Spectral::first_and_second(std::span<const Complex> f, ComplexVector& d1, ComplexVector& d2) const {
  const std::size_t n = f.size();
  ComplexVector spec(n), tmp(n);
  d1.resize(n);
  d2.resize(n);
  forward(f, spec);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = spec[i] * Complex{0.0, k_[i]};
  tmp[n / 2] = 0.0;
  backward(tmp, d1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = -spec[i] * (k_[i] * k_[i]);
  backward(tmp, d2);
}

ComplexVector fd4_first(std::span<const Complex> f, double dx) {
  const std::size_t n = f.size();
  ComplexVector out(n);
  auto at = [&](std::size_t i, long off) {
    return f[static_cast<std::size_t>(static_cast<long>(i + n) + off) % n];
  };
  const double c = 1.0 / (12.0 * dx);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = c * (-at(i, 2) + 8.0 * at(i, 1) - 8.0 * at(i, -1) + at(i, -2));
  }
  return out;
}

ComplexVector fd4_second(std::span<const Complex> f, double dx) {
  const std::size_t n = f.size();
  ComplexVector out(n);
  auto at = [&](std::size_t i, long off) {
    return f[static_cast<std::size_t>(static_cast<long>(i + n) + off) % n];
  };
  const double c = 1.0 / (12.0 * dx * dx);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = c * (-at(i, 2) + 16.0 * at(i, 1) - 30.0 * f[i] + 16.0 * at(i, -1) - at(i, -2));
  }
  return out;
}

void derivatives(const Spectral& spectral, DerivativeMethod method, std::span<const Complex> f,
                 ComplexVector& d1, ComplexVector& d2) {
  if (method == DerivativeMethod::Spectral) {
    spectral.first_and_second(f, d1, d2);
  } else {
    const double dx = spectral.grid().dx();
    d1 = fd4_first(f, dx);
    d2 = fd4_second(f, dx);
  }
}

}  // namespace bohmwork
