#include "bohmwork/propagator.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bohmwork/errors.hpp"

namespace bohmwork {

double max_step(const HamiltonianSpec& h) {
  if (h.energy_scale > 0.0) return 0.05 / h.energy_scale;
  return std::numeric_limits<double>::infinity();
}

void PropagationPlan::validate() const {
  hamiltonian.validate();
  if (n_steps < 1) throw ValidationError("propagation n_steps must be >= 1");
  if (snapshot_stride < 1) throw ValidationError("propagation snapshot_stride must be >= 1");
  if (n_steps % snapshot_stride != 0) {
    throw ValidationError("propagation snapshot_stride must divide n_steps");
  }
  if (!(t_end > t_start)) throw ValidationError("propagation requires t_end > t_start");
  const double bound = max_step(hamiltonian);
  if (dt() > bound) {
    std::ostringstream msg;
    msg << "propagation dt = " << dt() << " exceeds the bound " << bound << "; use n_steps >= "
        << static_cast<std::size_t>(std::ceil((t_end - t_start) / bound));
    throw StepSizeError(msg.str());
  }
}

Propagator::Propagator(const Grid1D& grid, HamiltonianSpec h)
    : spectral_(grid), h_(std::move(h)), potential_(h_.sample_potential(grid)) {
  h_.validate();
}

void Propagator::step(WaveFunction& psi, double dt) const {
  const Grid1D& g = spectral_.grid();
  if (!(psi.grid == g)) throw ValidationError("wave function grid does not match the propagator");
  const std::size_t n = g.size();
  const double hbar = h_.hbar;
  const double m = h_.mass;
  const double tm = psi.time + 0.5 * dt;
  const double f1 = h_.f1(tm);
  const double f2 = h_.f2(tm);
  const RealVector& k = spectral_.wavenumbers();

  ComplexVector kin(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = hbar * hbar * k[i] * k[i] / (2.0 * m) - hbar * k[i] * f2;
    kin[i] = std::polar(1.0, -0.5 * dt * e / hbar);
  }

  ComplexVector spec(n);
  spectral_.forward(psi.values, spec);
  for (std::size_t i = 0; i < n; ++i) spec[i] *= kin[i];
  spectral_.backward(spec, psi.values);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = potential_[i] - g.x(i) * f1;
    psi.values[i] *= std::polar(1.0, -dt * e / hbar);
  }
  spectral_.forward(psi.values, spec);
  for (std::size_t i = 0; i < n; ++i) spec[i] *= kin[i];
  spectral_.backward(spec, psi.values);
  psi.time += dt;
}

WaveFunction step(const WaveFunction& psi, const HamiltonianSpec& h, double t, double dt) {
  if (std::abs(dt) > max_step(h)) {
    std::ostringstream msg;
    msg << "step dt = " << dt << " exceeds the bound " << max_step(h);
    throw StepSizeError(msg.str());
  }
  require_normalized(psi);
  Propagator prop(psi.grid, h);
  WaveFunction out = psi;
  out.time = t;
  prop.step(out, dt);
  return out;
}

SnapshotSeries propagate(const WaveFunction& psi0, const PropagationPlan& plan) {
  plan.validate();
  require_normalized(psi0);
  if (std::abs(psi0.time - plan.t_start) > 1e-12 * std::max(1.0, std::abs(plan.t_start))) {
    throw ValidationError("initial state time does not match plan t_start");
  }
  const Propagator prop(psi0.grid, plan.hamiltonian);
  const double dt = plan.dt();

  SnapshotSeries series{psi0.grid, {}, {}, 0, 0.0, dt};
  const std::size_t n_snap = plan.n_steps / plan.snapshot_stride + 1;
  series.times.reserve(n_snap);
  series.states.reserve(n_snap);

  WaveFunction psi = psi0;
  psi.time = plan.t_start;
  series.times.push_back(psi.time);
  series.states.push_back(psi);
  for (std::size_t s = 1; s <= plan.n_steps; ++s) {
    prop.step(psi, dt);
    // Recompute from the step count so times carry no accumulated rounding.
    psi.time = plan.t_start + static_cast<double>(s) * dt;
    if (s == plan.n_steps) psi.time = plan.t_end;
    if (s % plan.snapshot_stride == 0) {
      const double drift = std::abs(psi.norm_squared() - 1.0);
      series.max_norm_drift = std::max(series.max_norm_drift, drift);
      if (drift > kRenormalizeThreshold) {
        psi.renormalize();
        ++series.renormalizations;
      }
      series.times.push_back(psi.time);
      series.states.push_back(psi);
    }
  }
  return series;
}

namespace {

void put_f64(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  os.write(buf, 8);
}

double get_f64(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw ValidationError("snapshot file truncated");
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_snapshots(const std::filesystem::path& path, const SnapshotSeries& series) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open snapshot file " + path.string());
  nlohmann::json header;
  header["grid"] = {{"x_min", series.grid.x_min()},
                    {"x_max", series.grid.x_max()},
                    {"n_points", series.grid.size()}};
  header["times"] = series.times;
  header["step_dt"] = series.step_dt;
  os << header.dump() << '\n';
  for (const auto& psi : series.states) {
    for (const auto& z : psi.values) {
      put_f64(os, z.real());
      put_f64(os, z.imag());
    }
  }
  if (!os) throw ValidationError("failed writing snapshot file " + path.string());
}

SnapshotSeries read_snapshots(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open snapshot file " + path.string());
  std::string line;
  std::getline(is, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad snapshot header: ") + e.what());
  }
  const Grid1D grid(header.at("grid").at("x_min").get<double>(), header.at("grid").at("x_max").get<double>(),
                    header.at("grid").at("n_points").get<std::size_t>());
  SnapshotSeries series{grid, header.at("times").get<std::vector<double>>(), {}, 0, 0.0,
                        header.value("step_dt", 0.0)};
  for (double t : series.times) {
    ComplexVector v(grid.size());
    for (auto& z : v) {
      const double re = get_f64(is);
      const double im = get_f64(is);
      z = {re, im};
    }
    series.states.emplace_back(grid, std::move(v), t);
  }
  return series;
}

}  // namespace bohmwork
