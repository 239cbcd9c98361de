#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "bohmwork/errors.hpp"
#include "bohmwork/mixtures_estimators.hpp"
#include "oracles.hpp"

using namespace bohmwork;
constexpr double kPi = std::numbers::pi;

namespace {

OscillatorParams default_params(double A = 1.0) {
  OscillatorParams p;
  p.A = A;
  p.tau = kPi;
  return p;
}

oracle::Oscillator as_oracle(const OscillatorParams& p) { return {p.m, p.omega, p.A, p.hbar, p.tau}; }

MixtureSpec spec_of(MixtureKind kind, double beta = 1.0, double A = 1.0) {
  MixtureSpec s;
  s.kind = kind;
  s.oscillator = default_params(A);
  s.beta = beta;
  return s;
}

SamplingOptions sampling(std::size_t n, std::uint64_t seed = 1) {
  SamplingOptions so;
  so.n_samples = n;
  so.seed = seed;
  return so;
}

double total_weight(const WorkDistribution& d) {
  double s = 0.0;
  for (const auto& x : d.samples) s += x.weight;
  return s;
}

double total_mass(const Histogram& h) { return std::accumulate(h.masses.begin(), h.masses.end(), 0.0); }

WorkDistribution manual(const std::vector<double>& works) {
  WorkDistribution d;
  for (double w : works) d.samples.push_back({w, w, 1.0 / static_cast<double>(works.size()), 0, 0.0});
  d.stratum_weights = {1.0};
  finalize_distribution(d);
  return d;
}

}  // namespace

TEST_CASE("thermal weights") {
  const auto p = default_params();
  const auto w = thermal_weights(p, 1.0);
  CHECK(w[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::exp(-(static_cast<double>(w.size()))) < kThermalTailBound);

  const auto cold = thermal_weights(p, 60.0);
  CHECK(cold.size() == 1);
  CHECK(cold[0] == 1.0);

  CHECK_THROWS_AS(thermal_weights(p, 1.0, 5), TruncationError);
  CHECK_NOTHROW(thermal_weights(p, 1.0, thermal_n_max(p, 1.0)));
  CHECK_THROWS_AS(thermal_weights(p, 1.0, thermal_n_max(p, 1.0) - 1), TruncationError);
  CHECK_THROWS_AS(thermal_weights(p, 0.0), ValidationError);
  CHECK_THROWS_AS(thermal_weights(p, -1.0), ValidationError);
}

TEST_CASE("coherent labels follow the thermal P-function") {
  const auto p = default_params();
  const Complex alpha = p.alpha();

  for (const auto& eta : sample_coherent_labels(p, 60.0, 100, 3)) {
    CHECK(std::abs(eta - alpha) < 1e-12);
  }

  const std::size_t n = 100000;
  const auto etas = sample_coherent_labels(p, 1.0, n, 4);
  const double sigma = coherent_label_sigma(p, 1.0);
  CHECK(sigma * sigma == doctest::Approx(1.0 / (2.0 * (std::exp(1.0) - 1.0))));
  Complex mean{0.0, 0.0};
  for (const auto& e : etas) mean += e;
  mean /= static_cast<double>(n);
  const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean.real() - alpha.real()) < tol);
  CHECK(std::abs(mean.imag() - alpha.imag()) < tol);
  double var = 0.0;
  for (const auto& e : etas) var += (e.real() - mean.real()) * (e.real() - mean.real());
  var /= static_cast<double>(n - 1);
  CHECK(std::abs(var / (sigma * sigma) - 1.0) < 5.0 * std::sqrt(2.0 / static_cast<double>(n)));

  // Common random numbers: the standardized draws do not depend on beta.
  const auto hot = sample_coherent_labels(p, 0.1, 10, 4);
  const double s_hot = coherent_label_sigma(p, 0.1);
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(std::abs((hot[j] - alpha) / s_hot - (etas[j] - alpha) / sigma) < 1e-12);
  }
}

TEST_CASE("stratum allocation") {
  const auto n = allocate_strata({0.7, 0.2, 0.1}, 1000, 100);
  CHECK(n == std::vector<std::size_t>{700, 200, 100});
  CHECK(allocate_strata({0.98, 0.01, 0.01}, 1000, 100) == std::vector<std::size_t>{980, 100, 100});
  CHECK_THROWS_AS(allocate_strata({0.5, 0.5}, 150, 100), AllocationError);

  auto spec = spec_of(MixtureKind::ThermalEigenstates, 1.0);
  CHECK_THROWS_AS(mixture_work_distribution(spec, Engine::Analytic, sampling(500)), AllocationError);
}

TEST_CASE("pure eigenstate work is Gaussian around the mean work") {
  const auto spec = spec_of(MixtureKind::PureEigenstate);
  const auto& p = spec.oscillator;
  const auto run = mixture_work_distribution(spec, Engine::Analytic, sampling(20000));
  const auto& d = run.distribution;

  const auto m = mean_work(d);
  CHECK(std::abs(m.value - p.mean_work()) < 3.0 * m.std_error + 1e-12);

  // W is affine in x0 with slope b, so its spread is |b| sigma0.
  const double b = eigen_work(p, 1.0) - eigen_work(p, 0.0);
  double var = 0.0, skew = 0.0;
  for (const auto& s : d.samples) var += s.weight * (s.work - m.value) * (s.work - m.value);
  for (const auto& s : d.samples) skew += s.weight * std::pow(s.work - m.value, 3);
  skew /= std::pow(var, 1.5);
  CHECK(std::sqrt(var) == doctest::Approx(std::abs(b) * p.sigma0()).epsilon(0.01));
  CHECK(std::abs(skew) < 0.05);
}

TEST_CASE("undriven mixtures give a point mass at zero") {
  for (auto kind : {MixtureKind::PureEigenstate, MixtureKind::ThermalEigenstates}) {
    CAPTURE(to_string(kind));
    const auto spec = spec_of(kind, 1.0, 0.0);
    const auto run = mixture_work_distribution(spec, Engine::Analytic, sampling(4000));
    const auto& d = run.distribution;
    for (const auto& s : d.samples) CHECK(std::abs(s.work) < 1e-12);
    const auto e = exp_work(d, 1.0);
    CHECK(std::abs(e.value - 1.0) < 1e-12);
  }
  const auto d = manual(std::vector<double>(50, 0.0));
  CHECK(exp_work(d, 1.0).value == 1.0);
  CHECK(exp_work(d, 1.0).std_error == 0.0);
  CHECK(d.histogram.masses.size() == 1);
  CHECK(d.histogram.masses[0] == 1.0);
}

TEST_CASE("undriven coherent mixture has zero mean work but a spread from the quantum potential") {
  const auto spec = spec_of(MixtureKind::ThermalCoherent, 1.0, 0.0);
  const auto d = mixture_work_distribution(spec, Engine::Analytic, sampling(20000)).distribution;
  const auto m = mean_work(d);
  CHECK(std::abs(m.value) < 3.0 * m.std_error);
  double spread = 0.0;
  for (const auto& s : d.samples) spread = std::max(spread, std::abs(s.work));
  CHECK(spread > 0.1);
}

TEST_CASE("estimators on hand-built samples") {
  const auto d = manual(std::vector<double>(10, 2.5));
  const auto m = mean_work(d);
  CHECK(m.value == 2.5);
  CHECK(m.std_error == 0.0);
  CHECK(d.n_effective == doctest::Approx(10.0));

  CHECK_THROWS_AS(mean_work(manual({1.0})), DegenerateStateError);

  // One sample holding almost all of the exponential mass trips the tail flag.
  std::vector<double> w(200, 10.0);
  w[17] = -10.0;
  const auto e = exp_work(manual(w), 1.0);
  CHECK(e.tail_flag);
  CHECK(e.top_share > 0.99);
  CHECK_FALSE(exp_work(manual(std::vector<double>(200, 1.0)), 1.0).tail_flag);

  WorkDistribution bad;
  bad.samples = {{1.0, 1.0, 0.6, 0, 0.0}, {2.0, 2.0, 0.6, 0, 0.0}};
  CHECK_THROWS_AS(finalize_distribution(bad), ValidationError);
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  const auto a = manual({0.0, 1.0, 2.0, 3.0});
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(manual({0.0, 0.0}), manual({1.0, 1.0})) == 1.0);
  CHECK(ks_distance(a, manual({0.0, 1.0, 2.0, 30.0})) == doctest::Approx(0.25));
}

TEST_CASE("weights and histogram masses are normalized for every mixture") {
  const std::vector<MixtureSpec> specs = {spec_of(MixtureKind::PureEigenstate),
                                          spec_of(MixtureKind::ThermalEigenstates, 1.0),
                                          spec_of(MixtureKind::ThermalEigenstates, 0.3),
                                          spec_of(MixtureKind::ThermalCoherent, 1.0), [] {
                                            auto s = spec_of(MixtureKind::PureCoherent);
                                            s.eta = {1.0, 0.5};
                                            return s;
                                          }()};
  for (const auto& spec : specs) {
    CAPTURE(to_string(spec.kind));
    const auto d = mixture_work_distribution(spec, Engine::Analytic, sampling(20000)).distribution;
    CHECK(std::abs(total_weight(d) - 1.0) <= 1e-12);
    CHECK(std::abs(total_mass(d.histogram) - 1.0) <= 1e-12);
    CHECK(d.histogram.edges.size() == d.histogram.masses.size() + 1);
    CHECK(d.histogram.masses.size() <= 1000);
    for (const auto& s : d.samples) CHECK(s.weight >= 0.0);
  }
}

TEST_CASE("both thermal mixtures share the mean work but not the exponentiated work") {
  const auto eig = mixture_work_distribution(spec_of(MixtureKind::ThermalEigenstates, 1.0), Engine::Analytic,
                                             sampling(400000, 5))
                       .distribution;
  const auto coh = mixture_work_distribution(spec_of(MixtureKind::ThermalCoherent, 1.0), Engine::Analytic,
                                             sampling(400000, 6))
                       .distribution;
  const double target = default_params().mean_work();
  const auto me = mean_work(eig), mc = mean_work(coh);
  CHECK(std::abs(me.value - target) < 3.0 * me.std_error);
  CHECK(std::abs(mc.value - target) < 3.0 * mc.std_error);

  const auto ee = exp_work(eig, 1.0), ec = exp_work(coh, 1.0);
  const double oracle = exp_work_eigenmixture(default_params(), 1.0);
  CHECK(oracle == doctest::Approx(1.4986).epsilon(1e-4));
  CHECK(std::abs(ee.value - oracle) < 3.0 * ee.std_error);
  CHECK(std::abs(ee.value - ec.value) > 5.0 * std::hypot(ee.std_error, ec.std_error));
  // The coherent average has no finite value at this temperature.
  CHECK(std::isinf(oracle::exp_work_coherent_exact(as_oracle(default_params()), 1.0)));
  CHECK(ec.tail_flag);
}

TEST_CASE("exponentiated work in the hot limit") {
  const auto p = default_params();
  const auto eig =
      mixture_work_distribution(spec_of(MixtureKind::ThermalEigenstates, 0.01), Engine::Analytic, sampling(300000, 9))
          .distribution;
  const auto ee = exp_work(eig, 0.01);
  CHECK(std::abs(ee.value - 1.0) < 3.0 * ee.std_error);
  CHECK(std::abs(ee.value - exp_work_eigenmixture(p, 0.01)) < 3.0 * ee.std_error);

  // The coherent mixture converges to its exact Gaussian-integral value, 1 + beta hbar omega sin^2(omega tau/2) + ...
  for (double beta : {0.01, 0.05}) {
    CAPTURE(beta);
    const auto coh =
        mixture_work_distribution(spec_of(MixtureKind::ThermalCoherent, beta), Engine::Analytic, sampling(300000, 10))
            .distribution;
    const auto ec = exp_work(coh, beta);
    const double exact = oracle::exp_work_coherent_exact(as_oracle(p), beta);
    CHECK(std::abs(ec.value - exact) < 3.0 * ec.std_error);
    CHECK_FALSE(ec.tail_flag);
  }
}

TEST_CASE("analytic and numeric engines agree") {
  auto spec = spec_of(MixtureKind::PureEigenstate);
  spec.n = 1;
  SamplingOptions so = sampling(10000, 12);
  so.failure_budget = 10;
  const auto a = mixture_work_distribution(spec, Engine::Analytic, so);
  const auto b = mixture_work_distribution(spec, Engine::Numeric, so);
  CHECK(ks_distance(a.distribution, b.distribution) < 0.02);
  CHECK(b.diagnostics.work_consistency_violations == 0);
  CHECK(b.diagnostics.max_norm_drift <= 1e-9);
  const auto ma = mean_work(a.distribution), mb = mean_work(b.distribution);
  CHECK(std::abs(ma.value - mb.value) < 3.0 * std::hypot(ma.std_error, mb.std_error) + 1e-6);
}

TEST_CASE("numeric coherent mixture and label strata") {
  auto spec = spec_of(MixtureKind::ThermalCoherent, 1.0);
  spec.n_eta_samples = 4;
  NumericSetup setup;
  setup.n_steps = 2048;
  setup.snapshot_stride = 4;
  SamplingOptions so = sampling(400, 3);
  so.failure_budget = 4;
  const auto run = mixture_work_distribution(spec, Engine::Numeric, so, setup);
  CHECK(run.diagnostics.n_strata == 4);
  CHECK(run.distribution.random_strata);
  CHECK(run.diagnostics.work_consistency_max < 1e-3);
  // Analytic closed form for the same labels and positions.
  const auto ana = mixture_work_distribution(spec, Engine::Analytic, so).distribution;
  REQUIRE(ana.samples.size() == run.distribution.samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < ana.samples.size(); ++i) {
    worst = std::max(worst, std::abs(ana.samples[i].work - run.distribution.samples[i].work));
  }
  CHECK(worst < 1e-2);

  spec.n_eta_samples = 0;
  CHECK_THROWS_AS(mixture_work_distribution(spec, Engine::Numeric, so, setup), ValidationError);
}

TEST_CASE("two-level well runs return zero work over a beat period") {
  MixtureSpec spec;
  spec.kind = MixtureKind::TwoLevelWell;
  spec.well.c0 = Complex(std::sqrt(0.5), 0.0);
  spec.well.c1 = Complex(0.0, std::sqrt(0.5));
  NumericSetup setup;
  setup.grid = Grid1D(-1.0, 1.0, 512);
  setup.n_steps = 2048;
  setup.snapshot_stride = 4;
  SamplingOptions so = sampling(300, 4);
  so.failure_budget = 6;
  // Trajectories that pass close to the instantaneous nodes at x = L/3 and 2L/3 carry a
  // larger quadrature error, so the check is on the population.
  for (auto engine : {Engine::Analytic, Engine::Numeric}) {
    CAPTURE(to_string(engine));
    const auto run = mixture_work_distribution(spec, engine, so, setup);
    const auto& d = run.distribution;
    std::size_t off_integral = 0, off_endpoint = 0;
    for (const auto& s : d.samples) {
      if (std::abs(s.work) > 1e-3) ++off_integral;
      if (std::abs(s.work_endpoint) > 1e-3) ++off_endpoint;
    }
    CHECK(off_integral <= d.samples.size() / 100);
    CHECK(off_endpoint <= d.samples.size() / 100);
    const auto m = mean_work(d);
    CHECK(std::abs(m.value) < 3.0 * m.std_error + 1e-3);
  }
}

TEST_CASE("sampling is reproducible") {
  const auto spec = spec_of(MixtureKind::ThermalEigenstates, 1.0);
  const auto a = mixture_work_distribution(spec, Engine::Analytic, sampling(5000, 77)).distribution;
  const auto b = mixture_work_distribution(spec, Engine::Analytic, sampling(5000, 77)).distribution;
  const auto c = mixture_work_distribution(spec, Engine::Analytic, sampling(5000, 78)).distribution;
  REQUIRE(a.samples.size() == b.samples.size());
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    same = same && a.samples[i].work == b.samples[i].work && a.samples[i].weight == b.samples[i].weight;
    differs = differs || a.samples[i].work != c.samples[i].work;
  }
  CHECK(same);
  CHECK(differs);

  auto pure = spec_of(MixtureKind::PureEigenstate);
  NumericSetup setup;
  setup.n_steps = 1024;
  SamplingOptions so = sampling(64, 5);
  so.threads = 1;
  const auto serial = mixture_work_distribution(pure, Engine::Numeric, so, setup).distribution;
  so.threads = 3;
  const auto threaded = mixture_work_distribution(pure, Engine::Numeric, so, setup).distribution;
  for (std::size_t i = 0; i < serial.samples.size(); ++i) CHECK(serial.samples[i].work == threaded.samples[i].work);
}

TEST_CASE("domain coverage is checked before the numeric engine runs") {
  auto spec = spec_of(MixtureKind::ThermalEigenstates, 1.0);
  NumericSetup setup;
  CHECK_NOTHROW(check_domain_coverage(spec, setup, 0));
  setup.grid = Grid1D(-8.0, 8.0, 2048);
  CHECK_THROWS_AS(check_domain_coverage(spec, setup, 0), ValidationError);
  CHECK_THROWS_AS(mixture_work_distribution(spec, Engine::Numeric, sampling(10000), setup), ValidationError);
  setup.grid = Grid1D(-12.0, 12.0, 64);
  CHECK_THROWS_AS(check_domain_coverage(spec, setup, 0), ValidationError);

  spec.beta = 0.01;
  setup.grid = Grid1D(-12.0, 12.0, 2048);
  CHECK_THROWS_AS(check_domain_coverage(spec, setup, 0), ValidationError);
}

TEST_CASE("report and histogram outputs") {
  const auto spec = spec_of(MixtureKind::ThermalEigenstates, 1.0);
  const auto d = mixture_work_distribution(spec, Engine::Analytic, sampling(5000)).distribution;
  const auto j = distribution_report(spec, Engine::Analytic, d, 1.0);
  for (const char* key : {"spec", "engine", "n_samples", "mean_W", "stderr_mean", "exp_work", "histogram"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["exp_work"].contains("tail_flag"));
  CHECK(j["spec"]["kind"] == "ThermalEigenstates");

  const auto path = std::filesystem::temp_directory_path() / "bohmwork_hist_test.csv";
  write_histogram_csv(path, d.histogram);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "bin_lo,bin_hi,mass");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == d.histogram.masses.size());
  std::filesystem::remove(path);
}

TEST_CASE("mixture spec validation") {
  auto spec = spec_of(MixtureKind::ThermalEigenstates, 0.0);
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = spec_of(MixtureKind::PureEigenstate);
  spec.n = -1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = spec_of(MixtureKind::ThermalEigenstates, 1.0);
  spec.n_max = 3;
  CHECK_THROWS_AS(spec.validate(), TruncationError);
  CHECK(parse_mixture_kind("ThermalCoherent") == MixtureKind::ThermalCoherent);
  CHECK_THROWS_AS(parse_mixture_kind("Thermal"), ValidationError);
  CHECK(parse_engine("numeric") == Engine::Numeric);
  CHECK_THROWS_AS(parse_engine("both"), ValidationError);
}
