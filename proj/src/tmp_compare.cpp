#include "bohmwork/tmp_compare.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "bohmwork/errors.hpp"
#include "bohmwork/parallel.hpp"

namespace bohmwork {

namespace {

constexpr std::size_t kColumnBlock = 64;

// (K v) with K = -i (zeta a^dag - zeta^* a), scaled by 1/r. `roots(k)` = sqrt(k).
void apply_generator(Complex zeta, double r, const Eigen::VectorXd& roots, const Eigen::MatrixXcd& in,
                     Eigen::MatrixXcd& out) {
  const auto N = in.rows();
  const Complex up = Complex(0.0, -1.0) * zeta / r;              // coefficient of a^dag
  const Complex down = Complex(0.0, 1.0) * std::conj(zeta) / r;  // coefficient of a
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    const Complex* x = in.col(c).data();
    Complex* y = out.col(c).data();
    y[0] = down * roots[1] * x[1];
    for (Eigen::Index k = 1; k + 1 < N; ++k) y[k] = roots[k] * (up * x[k - 1]) + roots[k + 1] * (down * x[k + 1]);
    y[N - 1] = roots[N - 1] * (up * x[N - 2]);
  }
}

// Top levels always count; the bottom levels count only when the window starts above 0.
void check_tail(const Eigen::VectorXcd& v, std::size_t first_level, const std::string& what) {
  double tail = fock_tail_mass(v);
  if (first_level > 0) {
    const auto bottom = std::min<Eigen::Index>(v.size(), std::max<Eigen::Index>(4, v.size() / 20));
    tail = std::max(tail, v.head(bottom).squaredNorm());
  }
  if (tail >= kFockTailBound) {
    std::ostringstream msg;
    msg << what << " has tail mass " << tail << " at the edge of the Fock window [" << first_level << ", "
        << first_level + static_cast<std::size_t>(v.size()) << "); increase n_trunc";
    throw TruncationError(msg.str());
  }
}

// <v| H(t) |v> for the driven oscillator in the truncated number basis.
double energy_expectation(const OscillatorParams& p, const HamiltonianSpec& h, double t, const Eigen::VectorXcd& v) {
  const auto N = v.size();
  const double sx = std::sqrt(p.hbar / (2.0 * p.m * p.omega));
  const double sp = std::sqrt(p.hbar * p.m * p.omega / 2.0);
  const double f1 = h.f1(t), f2 = h.f2(t);
  Complex acc{0.0, 0.0};
  for (Eigen::Index k = 0; k < N; ++k) {
    // (a v)_k and (a^dag v)_k.
    const Complex av = k + 1 < N ? std::sqrt(static_cast<double>(k + 1)) * v(k + 1) : Complex{};
    const Complex adv = k > 0 ? std::sqrt(static_cast<double>(k)) * v(k - 1) : Complex{};
    const Complex xv = sx * (av + adv);
    const Complex pv = Complex(0.0, sp) * (adv - av);
    const Complex hv = p.hbar * p.omega * (static_cast<double>(k) + 0.5) * v(k) - f1 * xv - f2 * pv;
    acc += std::conj(v(k)) * hv;
  }
  return acc.real();
}

// Lab-frame U(tau) = D(delta(tau)) e^{-i omega tau a^dag a} D(alpha)^dag, up to a global phase.
Eigen::VectorXcd evolve_lab(const OscillatorParams& p, const Eigen::VectorXcd& psi0) {
  Eigen::MatrixXcd v = apply_displacement(-p.alpha(), psi0);
  for (Eigen::Index k = 0; k < v.rows(); ++k) v(k, 0) *= std::polar(1.0, -p.omega * p.tau * static_cast<double>(k));
  return apply_displacement(eigen_displacement(p, p.tau), v).col(0);
}

}  // namespace

Eigen::MatrixXcd apply_displacement(Complex zeta, const Eigen::MatrixXcd& block, std::size_t first_level) {
  const auto N = block.rows();
  if (zeta == Complex{0.0, 0.0} || N <= 1) return block;
  const auto top = static_cast<double>(first_level) + static_cast<double>(N);
  // Gershgorin bound on the spectrum of K.
  const double r = 2.0 * std::abs(zeta) * std::sqrt(top);
  const int k_max = static_cast<int>(std::ceil(r + 10.0 * std::cbrt(r) + 30.0));

  const Eigen::VectorXd roots =
      Eigen::VectorXd::LinSpaced(N, static_cast<double>(first_level), top - 1.0).cwiseSqrt();

  Eigen::MatrixXcd t_prev = block;
  Eigen::MatrixXcd t_cur(N, block.cols());
  apply_generator(zeta, r, roots, t_prev, t_cur);
  Eigen::MatrixXcd out = boost::math::cyl_bessel_j(0, r) * t_prev;
  Complex ik{0.0, 1.0};
  out += 2.0 * ik * boost::math::cyl_bessel_j(1, r) * t_cur;
  Eigen::MatrixXcd t_next(N, block.cols());
  for (int k = 2; k <= k_max; ++k) {
    apply_generator(zeta, r, roots, t_cur, t_next);
    t_next = 2.0 * t_next - t_prev;
    ik *= Complex(0.0, 1.0);
    const double jk = boost::math::cyl_bessel_j(k, r);
    out += 2.0 * ik * jk * t_next;
    std::swap(t_prev, t_cur);
    std::swap(t_cur, t_next);
    if (k > r && std::abs(jk) < 1e-18) break;
  }
  return out;
}

double fock_tail_mass(const Eigen::VectorXcd& v) {
  const auto n = v.size();
  const auto top = std::min<Eigen::Index>(n, std::max<Eigen::Index>(4, n / 20));
  return v.tail(top).squaredNorm();
}

std::size_t default_n_trunc(const OscillatorParams& p, int n_max) {
  const Complex d = p.alpha() * Complex(1.0, p.omega * p.tau);
  return 4 * static_cast<std::size_t>(n_max) + 4 * static_cast<std::size_t>(std::ceil(std::norm(d))) + 20;
}

Eigen::VectorXcd evolved_state_fock(const OscillatorParams& p, int n, std::size_t n_trunc) {
  p.validate();
  if (n < 0 || static_cast<std::size_t>(n) >= n_trunc) throw ValidationError("need 0 <= n < n_trunc");
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n_trunc), 1);
  e(n, 0) = 1.0;
  const Eigen::VectorXcd v = apply_displacement(p.alpha() * Complex(1.0, p.omega * p.tau), e).col(0);
  check_tail(v, 0, "evolved state n = " + std::to_string(n));
  return v;
}

double TMPDistribution::mean() const {
  double s = 0.0;
  for (const auto& o : outcomes) s += o.probability * o.dE;
  return s;
}

double TMPDistribution::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (const auto& o : outcomes) s += o.probability * (o.dE - mu) * (o.dE - mu);
  return s;
}

double TMPDistribution::total_probability() const {
  double s = 0.0;
  for (const auto& o : outcomes) s += o.probability;
  return s;
}

double TMPDistribution::exp_work(double beta_prime) const {
  double s = 0.0;
  for (const auto& o : outcomes) s += o.probability * std::exp(-beta_prime * o.dE);
  return s;
}

TMPDistribution tmp_distribution(const OscillatorParams& p, double beta, std::size_t n_trunc, std::size_t threads) {
  p.validate();
  TMPDistribution d;
  d.beta = beta;
  d.tau = p.tau;
  d.q_n = thermal_weights(p, beta);
  const auto n_cols = static_cast<Eigen::Index>(d.q_n.size());
  const int n_max = static_cast<int>(n_cols) - 1;
  if (n_trunc == 0) n_trunc = default_n_trunc(p, n_max);
  if (static_cast<Eigen::Index>(n_trunc) <= n_cols) throw TruncationError("n_trunc must exceed the thermal n_max");
  const auto N = static_cast<Eigen::Index>(n_trunc);

  const Complex delta = p.alpha() * Complex(1.0, p.omega * p.tau);
  d.p_m_given_n = Eigen::MatrixXd::Zero(N, n_cols);
  const std::size_t n_blocks = (static_cast<std::size_t>(n_cols) + kColumnBlock - 1) / kColumnBlock;
  // Rows beyond a few widths of the displacement carry no mass, so each column block
  // works on a window of levels around its own; the tail checks cover both window edges.
  const double spread = std::abs(delta) + std::abs(p.alpha());
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    const auto c0 = static_cast<Eigen::Index>(b * kColumnBlock);
    const auto nc = std::min<Eigen::Index>(kColumnBlock, n_cols - c0);
    const double reach = 4.0 * spread * std::sqrt(static_cast<double>(c0 + nc)) + 4.0 * spread * spread + 40.0;
    const auto w = static_cast<Eigen::Index>(std::ceil(reach));
    const Eigen::Index lo = std::max<Eigen::Index>(0, c0 - w);
    const Eigen::Index hi = std::min<Eigen::Index>(N, c0 + nc + w);
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(hi - lo, nc);
    for (Eigen::Index j = 0; j < nc; ++j) e(c0 + j - lo, j) = 1.0;
    const auto first = static_cast<std::size_t>(lo);
    const Eigen::MatrixXcd evolved = apply_displacement(delta, e, first);
    const Eigen::MatrixXcd projected = apply_displacement(-p.alpha(), evolved, first);
    for (Eigen::Index j = 0; j < nc; ++j) {
      check_tail(evolved.col(j), first, "evolved state n = " + std::to_string(c0 + j));
      check_tail(projected.col(j), first, "projected state n = " + std::to_string(c0 + j));
      d.p_m_given_n.col(c0 + j).segment(lo, hi - lo) = projected.col(j).cwiseAbs2();
    }
  });

  std::map<Eigen::Index, double> by_level;
  for (Eigen::Index n = 0; n < n_cols; ++n) {
    for (Eigen::Index m = 0; m < N; ++m) {
      const double w = d.q_n[static_cast<std::size_t>(n)] * d.p_m_given_n(m, n);
      if (w > 0.0) by_level[m - n] += w;
    }
  }
  for (const auto& [k, prob] : by_level) {
    d.outcomes.push_back({p.hbar * p.omega * static_cast<double>(k), prob});
  }
  return d;
}

nlohmann::json to_json(const TMPDistribution& d) {
  nlohmann::json j;
  j["beta"] = d.beta;
  j["tau"] = d.tau;
  auto& out = j["outcomes"] = nlohmann::json::array();
  for (const auto& o : d.outcomes) out.push_back({{"dE", o.dE}, {"p", o.probability}});
  j["mean"] = d.mean();
  j["variance"] = d.variance();
  return j;
}

double fock_mean_work(const MixtureSpec& spec, std::size_t n_trunc) {
  spec.validate();
  // The well Hamiltonian is time independent: both traces are sum |c_k|^2 E_k.
  if (spec.kind == MixtureKind::TwoLevelWell) return 0.0;
  const auto& p = spec.oscillator;
  const HamiltonianSpec h = driven_oscillator(p);

  std::vector<std::pair<double, Eigen::VectorXcd>> states;  // (weight, psi0)
  std::size_t N = n_trunc;
  auto displaced_level = [&](Complex z, int n) {
    if (static_cast<std::size_t>(n) >= N) {
      throw TruncationError("n_trunc " + std::to_string(N) + " does not hold level " + std::to_string(n));
    }
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(N), 1);
    e(n, 0) = 1.0;
    return Eigen::VectorXcd(apply_displacement(z, e).col(0));
  };
  switch (spec.kind) {
    case MixtureKind::PureEigenstate:
      if (N == 0) N = default_n_trunc(p, spec.n);
      states.emplace_back(1.0, displaced_level(p.alpha(), spec.n));
      break;
    case MixtureKind::PureCoherent: {
      if (N == 0) {
        const double reach = std::max(std::abs(spec.eta), std::abs(coherent_amplitude(p, spec.eta, p.tau))) + 4.0;
        N = default_n_trunc(p, 0) + 4 * static_cast<std::size_t>(std::ceil(reach * reach));
      }
      states.emplace_back(1.0, displaced_level(spec.eta, 0));
      break;
    }
    case MixtureKind::ThermalEigenstates:
    case MixtureKind::ThermalCoherent: {
      const auto q = thermal_weights(p, spec.beta, spec.kind == MixtureKind::ThermalEigenstates ? spec.n_max : -1);
      if (N == 0) N = default_n_trunc(p, static_cast<int>(q.size()) - 1);
      for (std::size_t n = 0; n < q.size(); ++n) states.emplace_back(q[n], displaced_level(p.alpha(), static_cast<int>(n)));
      break;
    }
    case MixtureKind::TwoLevelWell: break;
  }

  double total = 0.0;
  for (const auto& [weight, psi0] : states) {
    check_tail(psi0, 0, "initial state");
    const Eigen::VectorXcd psi_t = evolve_lab(p, psi0);
    check_tail(psi_t, 0, "evolved state");
    total += weight * (energy_expectation(p, h, p.tau, psi_t) - energy_expectation(p, h, 0.0, psi0));
  }
  return total;
}

}  // namespace bohmwork
