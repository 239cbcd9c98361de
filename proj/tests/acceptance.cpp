// Acceptance run: one PASS/FAIL line per criterion for the default scenario
// (m = omega = hbar = A = 1, tau = pi, grid [-12, 12] with 2048 nodes, 4096 steps, stride 4).

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bohmwork/mixtures_estimators.hpp"
#include "bohmwork/osc_analytic.hpp"
#include "bohmwork/propagator.hpp"
#include "bohmwork/qhj_fields.hpp"
#include "bohmwork/scenario.hpp"
#include "bohmwork/tmp_compare.hpp"
#include "bohmwork/trajectories.hpp"
#include "oracles.hpp"

using namespace bohmwork;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kPathTol = 1e-3;           // criterion 1
constexpr double kWorkGap = 1e-3;           // criterion 2
constexpr double kWorkShare = 0.999;        // criterion 2
constexpr double kSigmas = 3.0;             // criteria 3, 4, 6, 9
constexpr double kMeanRel = 0.01;           // criterion 3
constexpr double kQuadratureTol = 1e-8;     // criterion 4
constexpr double kSeparation = 5.0;         // criterion 5
constexpr double kSlopeRel = 0.10;          // criterion 5
constexpr double kChi2P = 0.01;             // criterion 7
constexpr double kNormDrift = 1e-9;         // criterion 8
constexpr double kInfidelity = 1e-6;        // criterion 8
constexpr double kOrderLo = 3.5, kOrderHi = 4.5;  // criterion 8
constexpr double kColumnTol = 1e-6;         // criterion 9
constexpr double kPoissonTol = 1e-8;        // criterion 9
constexpr double kTmpMeanFloor = 1e-5;      // criterion 9

// Sample sizes.
constexpr std::size_t kPerStratum = 10000;
constexpr std::size_t kCoherentSamples = 200000;
constexpr std::size_t kHotSamples = 1000000;
constexpr std::size_t kNumericEigenSamples = 20000;
constexpr std::size_t kNumericLabels = 48;
constexpr std::size_t kNumericCoherentSamples = 960;
constexpr std::size_t kPathSamples = 200;
constexpr std::size_t kBornSamples = 10000;

OscillatorParams default_params() {
  OscillatorParams p;
  p.tau = kPi;
  return p;
}

NumericSetup default_setup() { return {}; }

PropagationPlan plan_for(const OscillatorParams& p, std::size_t n_steps, std::size_t stride) {
  PropagationPlan plan;
  plan.hamiltonian = driven_oscillator(p);
  plan.t_start = 0.0;
  plan.t_end = p.tau;
  plan.n_steps = n_steps;
  plan.snapshot_stride = stride;
  return plan;
}

MixtureSpec spec_of(MixtureKind kind, double beta = 1.0) {
  MixtureSpec s;
  s.kind = kind;
  s.oscillator = default_params();
  s.beta = beta;
  return s;
}

SamplingOptions sampling(std::size_t n, std::uint64_t seed, std::size_t floor = 100) {
  SamplingOptions so;
  so.n_samples = n;
  so.seed = seed;
  so.stratum_floor = floor;
  so.threads = 0;
  return so;
}

int passed = 0, failed = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %2d %s: %s | %s\n", id, ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  (ok ? passed : failed)++;
}

void note(int id, const std::string& detail) {
  std::printf("criterion %2d note: %s\n", id, detail.c_str());
  std::fflush(stdout);
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double share_within(const WorkDistribution& d, double gap) {
  std::size_t ok = 0;
  for (const auto& s : d.samples) ok += std::abs(s.work - s.work_endpoint) <= gap;
  return static_cast<double>(ok) / static_cast<double>(d.samples.size());
}

double share_within(const std::vector<Trajectory>& trs, double gap) {
  std::size_t ok = 0;
  for (const auto& t : trs) ok += std::abs(t.work_integral - t.work_endpoint) <= gap;
  return static_cast<double>(ok) / static_cast<double>(trs.size());
}

// Shared runs.
struct Runs {
  MixtureRun eigen_analytic;       // beta = 1, 10^4 per stratum
  MixtureRun coherent_analytic;    // beta = 1
  MixtureRun eigen_numeric;        // beta = 1
  MixtureRun coherent_numeric;     // beta = 1, kNumericLabels labels
  std::vector<std::vector<Trajectory>> pure_numeric;  // n = 0, 1, 3
  MixtureRun well_numeric;
};

void criterion1(Runs& runs) {
  const auto p = default_params();
  const auto h = driven_oscillator(p);
  const NumericSetup setup = default_setup();
  double worst_path = 0.0, worst_spread = 0.0;
  std::vector<double> ref_drift;  // x - x0 of the first n = 0 trajectory
  std::vector<double> ref_times;
  for (int n : {0, 1, 3}) {
    const auto snaps = propagate(displaced_number_state(p, n, 0.0, setup.grid), plan_for(p, setup.n_steps, setup.snapshot_stride));
    const FieldSeries s = field_series_from_snapshots(snaps, h);
    TrajectorySpec spec;
    spec.n_samples = kPathSamples;
    spec.rng_seed = 100 + static_cast<std::uint64_t>(n);
    spec.integration = {p.tau / static_cast<double>(setup.n_steps), 4};
    spec.threads = 0;
    auto r = run_ensemble(spec, s);
    for (const auto& tr : r.trajectories) {
      if (ref_drift.empty()) {
        ref_times = tr.times;
        for (std::size_t k = 0; k < tr.times.size(); ++k) ref_drift.push_back(tr.positions[k] - tr.x0);
      }
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        worst_path = std::max(worst_path, std::abs(tr.positions[k] - eigen_trajectory(p, tr.x0, tr.times[k])));
        if (tr.times[k] == ref_times[k]) {
          worst_spread = std::max(worst_spread, std::abs((tr.positions[k] - tr.x0) - ref_drift[k]));
        }
      }
    }
    if (!r.failures.empty()) worst_path = std::numeric_limits<double>::infinity();
    runs.pure_numeric.push_back(std::move(r.trajectories));
  }
  report(1, "analytic trajectory reproduction", worst_path <= kPathTol && worst_spread <= kPathTol,
         fmt("n = 0, 1, 3 with %zu trajectories each: max |x - x_closed| = %.2e, max spread across n = %.2e (tol %.0e)",
             kPathSamples, worst_path, worst_spread, kPathTol));
}

void run_shared(Runs& runs) {
  runs.eigen_analytic = mixture_work_distribution(spec_of(MixtureKind::ThermalEigenstates), Engine::Analytic,
                                                  sampling(19 * kPerStratum, 1, kPerStratum));
  auto coh = spec_of(MixtureKind::ThermalCoherent);
  runs.coherent_analytic = mixture_work_distribution(coh, Engine::Analytic, sampling(kCoherentSamples, 2));
  runs.eigen_numeric = mixture_work_distribution(spec_of(MixtureKind::ThermalEigenstates), Engine::Numeric,
                                                 sampling(kNumericEigenSamples, 3), default_setup());
  coh.n_eta_samples = kNumericLabels;
  runs.coherent_numeric =
      mixture_work_distribution(coh, Engine::Numeric, sampling(kNumericCoherentSamples, 4), default_setup());
  auto well = spec_of(MixtureKind::TwoLevelWell);
  well.well.c0 = {1.0 / std::sqrt(2.0), 0.0};
  well.well.c1 = {0.0, 1.0 / std::sqrt(2.0)};
  NumericSetup well_setup;
  well_setup.grid = Grid1D(-1.0, 1.0, 512);
  well_setup.n_steps = 16384;
  runs.well_numeric = mixture_work_distribution(well, Engine::Numeric, sampling(kBornSamples, 5), well_setup);
}

void criterion2(const Runs& runs) {
  struct Row {
    const char* name;
    double share;
  };
  std::vector<Row> rows = {
      {"pure n=0 numeric", share_within(runs.pure_numeric[0], kWorkGap)},
      {"pure n=1 numeric", share_within(runs.pure_numeric[1], kWorkGap)},
      {"pure n=3 numeric", share_within(runs.pure_numeric[2], kWorkGap)},
      {"thermal eigen numeric", share_within(runs.eigen_numeric.distribution, kWorkGap)},
      {"thermal coherent numeric", share_within(runs.coherent_numeric.distribution, kWorkGap)},
      {"two-level well numeric (16384 steps)", share_within(runs.well_numeric.distribution, kWorkGap)},
      {"thermal eigen analytic", share_within(runs.eigen_analytic.distribution, kWorkGap)},
      {"thermal coherent analytic", share_within(runs.coherent_analytic.distribution, kWorkGap)},
  };
  bool ok = true;
  std::ostringstream detail;
  for (const auto& r : rows) {
    ok = ok && r.share >= kWorkShare;
    detail << r.name << " " << std::fixed;
    detail.precision(5);
    detail << r.share << "; ";
  }
  detail << "need >= " << kWorkShare << " within " << kWorkGap;
  report(2, "work identity per trajectory", ok, detail.str());
}

void criterion3(const Runs& runs) {
  const double target = default_params().mean_work();
  auto judge = [&](const MixtureRun& r, bool relative, std::string& text) {
    const Estimate m = mean_work(r.distribution);
    const bool in_sigma = std::abs(m.value - target) <= kSigmas * m.std_error;
    const bool in_rel = std::abs(m.value - target) <= kMeanRel * target;
    text += fmt("%.5f +- %.5f; ", m.value, m.std_error);
    return in_sigma && (!relative || in_rel);
  };
  std::string text;
  text += "eigen analytic ";
  bool ok = judge(runs.eigen_analytic, true, text);
  text += "coherent analytic ";
  ok = judge(runs.coherent_analytic, true, text) && ok;
  text += "eigen numeric ";
  ok = judge(runs.eigen_numeric, true, text) && ok;
  text += fmt("target %.5f, %.0f stderr and %.0f%%", target, kSigmas, 100 * kMeanRel);
  report(3, "average work", ok, text);

  std::string info;
  const bool sigma_ok = judge(runs.coherent_numeric, false, info);
  info.resize(info.size() - 2);
  note(3, fmt("coherent numeric with %zu labels: %s, within 3 stderr: %s (the 1%% bound would need about 4e4 labels)",
              kNumericLabels, info.c_str(), sigma_ok ? "yes" : "no"));
}

void criterion4(const Runs& runs) {
  const auto p = default_params();
  const double exact = exp_work_eigenmixture(p, 1.0);
  const ExpWorkEstimate e = exp_work(runs.eigen_analytic.distribution, 1.0);
  const double quad = oracle::exp_work_eigenmixture_quadrature({p.m, p.omega, p.A, p.hbar, p.tau}, 1.0);
  const bool ok = std::abs(e.value - exact) <= kSigmas * e.std_error && std::abs(quad - exact) <= kQuadratureTol;
  report(4, "exponentiated work, eigenstate mixture", ok,
         fmt("MC %.5f +- %.5f vs closed form %.8f (tail flag %s); quadrature |diff| = %.1e", e.value, e.std_error, exact,
             e.tail_flag ? "set" : "clear", std::abs(quad - exact)));
}

void criterion5(const Runs& runs) {
  const ExpWorkEstimate eig = exp_work(runs.eigen_analytic.distribution, 1.0);
  const ExpWorkEstimate coh = exp_work(runs.coherent_analytic.distribution, 1.0);
  const double combined = std::hypot(eig.std_error, coh.std_error);
  const double gap = std::abs(eig.value - coh.value) / combined;

  // Common random numbers: the same seed gives the same label draws at both beta.
  const auto p = default_params();
  const auto lo = mixture_work_distribution(spec_of(MixtureKind::ThermalCoherent, 0.01), Engine::Analytic, sampling(kHotSamples, 6));
  const auto hi = mixture_work_distribution(spec_of(MixtureKind::ThermalCoherent, 0.02), Engine::Analytic, sampling(kHotSamples, 6));
  const double slope = (exp_work(hi.distribution, 0.02).value - exp_work(lo.distribution, 0.01).value) / 0.01;
  const double expected = p.hbar * p.omega * std::pow(std::sin(p.omega * p.tau / 2.0), 2);
  const bool ok = gap > kSeparation && std::abs(slope - expected) <= kSlopeRel * std::abs(expected);
  report(5, "mixture dependence", ok,
         fmt("beta=1 eigen %.4f +- %.4f, coherent %.4f +- %.4f, separation %.1f stderr (need > %.0f); small-beta slope %.4f vs %.4f (tol %.0f%%)",
             eig.value, eig.std_error, coh.value, coh.std_error, gap, kSeparation, slope, expected, 100 * kSlopeRel));
}

void criterion6() {
  const double beta = 0.01;
  const auto eig = mixture_work_distribution(spec_of(MixtureKind::ThermalEigenstates, beta), Engine::Analytic,
                                             sampling(kHotSamples, 7));
  const auto coh = mixture_work_distribution(spec_of(MixtureKind::ThermalCoherent, beta), Engine::Analytic,
                                             sampling(kHotSamples, 8));
  const ExpWorkEstimate e = exp_work(eig.distribution, beta);
  const ExpWorkEstimate c = exp_work(coh.distribution, beta);
  const double ze = std::abs(e.value - 1.0) / e.std_error;
  const double zc = std::abs(c.value - 1.0) / c.std_error;
  report(6, "high-temperature limit", ze <= kSigmas && zc <= kSigmas,
         fmt("beta=0.01: eigen %.6f +- %.6f (%.1f stderr from 1), coherent %.6f +- %.6f (%.1f stderr from 1; first-order "
             "value %.4f)",
             e.value, e.std_error, ze, c.value, c.std_error, zc, exp_work_coherent_highT(default_params(), beta).value));
}

void criterion7() {
  const auto p = default_params();
  const NumericSetup setup = default_setup();
  const auto snaps = propagate(displaced_number_state(p, 1, 0.0, setup.grid), plan_for(p, setup.n_steps, setup.snapshot_stride));
  const FieldSeries s = field_series_from_snapshots(snaps, driven_oscillator(p));
  TrajectorySpec spec;
  spec.n_samples = kBornSamples;
  spec.rng_seed = 2024;
  spec.integration = {p.tau / static_cast<double>(setup.n_steps), 0};
  spec.failure_budget = kBornSamples / 1000;
  spec.threads = 0;
  const auto r = run_ensemble(spec, s);

  const int bins = 40;
  const InverseCdfSampler final_cdf(s.grid, s.final_density);
  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b) edges[b] = final_cdf.quantile(static_cast<double>(b) / bins);
  std::vector<double> counts(bins, 0.0);
  for (const auto& tr : r.trajectories) {
    auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, tr.x_final());
    counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  const double expected = static_cast<double>(r.trajectories.size()) / bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double pvalue = boost::math::gamma_q(0.5 * (bins - 1), 0.5 * chi2);
  report(7, "equivariance", pvalue > kChi2P,
         fmt("n=1 numeric, %zu trajectories (%zu node collisions), %d equal-probability bins: chi2 = %.2f, p = %.3f (need > %.2f)",
             r.trajectories.size(), r.failures.size(), bins, chi2, pvalue, kChi2P));
}

void criterion8() {
  const auto p = default_params();
  const NumericSetup setup = default_setup();
  double drift = 0.0, worst_infidelity = 0.0;
  for (int n : {0, 1, 3}) {
    const auto series = propagate(displaced_number_state(p, n, 0.0, setup.grid), plan_for(p, setup.n_steps, setup.snapshot_stride));
    drift = std::max(drift, series.max_norm_drift);
    const auto exact = displaced_number_state(p, n, p.tau, setup.grid);
    worst_infidelity = std::max(worst_infidelity, std::abs(1.0 - std::norm(inner_product(exact, series.states.back()))));
  }
  const auto psi0 = displaced_number_state(p, 1, 0.0, setup.grid);
  const auto exact = displaced_number_state(p, 1, p.tau, setup.grid);
  std::vector<double> errors;
  for (std::size_t n : {256u, 512u, 1024u}) {
    const auto last = propagate(psi0, plan_for(p, n, n)).states.back();
    double s = 0.0;
    for (std::size_t i = 0; i < last.values.size(); ++i) s += std::norm(last.values[i] - exact.values[i]);
    errors.push_back(std::sqrt(s * setup.grid.dx()));
  }
  const double r1 = errors[0] / errors[1], r2 = errors[1] / errors[2];
  const bool ok = drift <= kNormDrift && worst_infidelity <= kInfidelity && r1 >= kOrderLo && r1 <= kOrderHi &&
                  r2 >= kOrderLo && r2 <= kOrderHi;
  report(8, "propagator quality", ok,
         fmt("norm drift %.1e (<= %.0e); worst |1 - terminal fidelity| %.1e (<= %.0e); dt-halving factors %.3f, %.3f in [%.1f, %.1f]",
             drift, kNormDrift, worst_infidelity, kInfidelity, r1, r2, kOrderLo, kOrderHi));
}

void criterion9(const Runs& runs) {
  const auto p = default_params();
  const TMPDistribution d = tmp_distribution(p, 1.0, 0, 0);
  double worst_col = 0.0;
  for (Eigen::Index n = 0; n < d.p_m_given_n.cols(); ++n) {
    worst_col = std::max(worst_col, std::abs(d.p_m_given_n.col(n).sum() - 1.0));
  }
  const Estimate hj = mean_work(runs.eigen_analytic.distribution);
  const Estimate hj_num = mean_work(runs.eigen_numeric.distribution);
  const bool mean_ok = std::abs(d.mean() - hj.value) <= kSigmas * hj.std_error + kTmpMeanFloor &&
                       std::abs(d.mean() - hj_num.value) <= kSigmas * hj_num.std_error + kTmpMeanFloor;

  auto undriven = p;
  undriven.A = 0.0;
  const TMPDistribution zero = tmp_distribution(undriven, 1.0);
  const bool point_mass = zero.outcomes.size() == 1 && zero.outcomes[0].dE == 0.0 &&
                          std::abs(zero.outcomes[0].probability - 1.0) <= kColumnTol;

  const Complex delta = p.alpha() * Complex(1.0, p.omega * p.tau);
  const Eigen::VectorXcd v = evolved_state_fock(p, 0, default_n_trunc(p, 0));
  double worst_poisson = 0.0;
  for (Eigen::Index m = 0; m < v.size(); ++m) {
    worst_poisson = std::max(worst_poisson, std::abs(std::norm(v(m)) - oracle::poisson(std::norm(delta), static_cast<int>(m))));
  }
  const bool ok = mean_ok && worst_col <= kColumnTol && point_mass && worst_poisson <= kPoissonTol;
  report(9, "TMP consistency", ok,
         fmt("TMP mean %.6f vs trajectory means %.5f +- %.5f (analytic), %.5f +- %.5f (numeric); max |column sum - 1| = %.1e; "
             "A=0 point mass %s; Poisson max diff %.1e; second moments TMP %.4f, trajectories %.4f",
             d.mean(), hj.value, hj.std_error, hj_num.value, hj_num.std_error, worst_col, point_mass ? "yes" : "no",
             worst_poisson, d.variance() + d.mean() * d.mean(), [&] {
               double s = 0.0;
               for (const auto& w : runs.eigen_analytic.distribution.samples) s += w.weight * w.work * w.work;
               return s;
             }()));
}

bool same_samples(const WorkDistribution& a, const WorkDistribution& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& x = a.samples[i];
    const auto& y = b.samples[i];
    if (std::memcmp(&x.work, &y.work, sizeof(double)) || std::memcmp(&x.work_endpoint, &y.work_endpoint, sizeof(double)) ||
        std::memcmp(&x.weight, &y.weight, sizeof(double)) || std::memcmp(&x.x0, &y.x0, sizeof(double))) {
      return false;
    }
  }
  return true;
}

void criterion10() {
  auto spec = spec_of(MixtureKind::PureEigenstate);
  spec.n = 1;
  auto a = sampling(400, 9);
  auto b = a;
  a.threads = 1;
  b.threads = 3;
  const bool numeric_same = same_samples(mixture_work_distribution(spec, Engine::Numeric, a, default_setup()).distribution,
                                         mixture_work_distribution(spec, Engine::Numeric, b, default_setup()).distribution);

  nlohmann::json config = {{"oscillator", {{"m", 1}, {"omega", 1}, {"A", 1}, {"hbar", 1}, {"tau", kPi}}},
                           {"mixture", {{"kind", "ThermalCoherent"}, {"beta", 1.0}}},
                           {"engine", "analytic"},
                           {"trajectories", {{"n_samples", 50000}, {"seed", 10}}}};
  const ScenarioConfig c = parse_config(config);
  const std::string s1 = run_scenario(c, {1, false, false}).summary.dump(2);
  const std::string s2 = run_scenario(c, {3, false, false}).summary.dump(2);
  report(10, "determinism", numeric_same && s1 == s2,
         fmt("numeric work samples identical across thread counts: %s; summary identical: %s", numeric_same ? "yes" : "no",
             s1 == s2 ? "yes" : "no"));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    Runs runs;
    criterion1(runs);
    run_shared(runs);
    criterion2(runs);
    criterion3(runs);
    criterion4(runs);
    criterion5(runs);
    criterion6();
    criterion7();
    criterion8();
    criterion9(runs);
    criterion10();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("acceptance: %d passed, %d failed (%.0f s)\n", passed, failed, elapsed());
  return failed == 0 ? 0 : 1;
}
