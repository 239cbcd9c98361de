#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <vector>

#include "bohmwork/mixtures_estimators.hpp"
#include "bohmwork/osc_analytic.hpp"

namespace bohmwork {

/// Coefficient mass allowed in the top levels of a truncated Fock vector.
inline constexpr double kFockTailBound = 1e-8;

/// D(zeta) = exp(zeta a^dag - zeta^* a) applied to each column of `block`, whose rows are
/// the levels first_level, first_level + 1, ... The generator is truncated to those levels
/// and exponentiated by a Chebyshev expansion.
Eigen::MatrixXcd apply_displacement(Complex zeta, const Eigen::MatrixXcd& block, std::size_t first_level = 0);

/// Mass of `v` in its top max(4, n/20) levels.
double fock_tail_mass(const Eigen::VectorXcd& v);

/// 4 n_max + 4 ceil(|alpha (1 + i omega tau)|^2) + 20.
std::size_t default_n_trunc(const OscillatorParams& p, int n_max);

/// D(alpha (1 + i omega tau)) |n> in the number basis of the frame rotating with the
/// undriven oscillator. Throws TruncationError if its tail mass is >= 1e-8.
Eigen::VectorXcd evolved_state_fock(const OscillatorParams& p, int n, std::size_t n_trunc);

struct TmpOutcome {
  double dE = 0.0;
  double probability = 0.0;
};

struct TMPDistribution {
  double beta = 0.0;
  double tau = 0.0;
  /// Sorted by dE, one entry per level difference.
  std::vector<TmpOutcome> outcomes;
  std::vector<double> q_n;
  /// p_m_given_n(m, n).
  Eigen::MatrixXd p_m_given_n;

  double mean() const;
  double variance() const;
  double total_probability() const;
  /// sum_dE P(dE) e^{-beta' dE}. Levels above the thermal cutoff are dropped, and their
  /// downward transitions are amplified by e^{beta' |dE|}, so this converges more slowly in
  /// n_max than the mean does.
  double exp_work(double beta_prime) const;
};

/// Two-measurement distribution for the thermal state at beta. The first measurement
/// projects on the displaced number states of H(0) with thermal weights; the second on
/// the eigenstates of H(tau), which in the rotating frame are D(alpha)|m>. n_trunc = 0
/// selects default_n_trunc.
TMPDistribution tmp_distribution(const OscillatorParams& p, double beta, std::size_t n_trunc = 0,
                                 std::size_t threads = 1);

nlohmann::json to_json(const TMPDistribution& d);

/// Tr[H(tau) rho(tau)] - Tr[H(0) rho(0)] in truncated Fock space, evolving with the
/// exact driven propagator. Thermal coherent mixtures share rho with the eigenstate
/// mixture. The two-level well returns its (zero) energy change in the well basis.
double fock_mean_work(const MixtureSpec& spec, std::size_t n_trunc = 0);

}  // namespace bohmwork
