#include <doctest.h>

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <sstream>

#include "dfsmem/error.hpp"
#include "dfsmem/fitting.hpp"
#include "dfsmem/rng.hpp"

using namespace dfsmem;

namespace {

DecayDataset noiseless(DecayFamily family, double A, double tau, std::initializer_list<double> times,
                       std::int64_t R) {
  DecayDataset d;
  for (double T : times) d.add(T, R, std::llround(decay_fidelity(family, A, tau, T) * static_cast<double>(R)));
  return d;
}

DecayDataset sampled(DecayFamily family, double A, double tau, std::span<const double> times, std::int64_t R,
                     std::uint64_t seed) {
  Rng rng(seed);
  DecayDataset d;
  for (double T : times) d.add(T, R, rng.binomial(R, decay_fidelity(family, A, tau, T)));
  return d;
}

}  // namespace

TEST_CASE("decay models") {
  CHECK(decay_fidelity(DecayFamily::Exponential, 1.0, 100.0, 0.0) == 1.0);
  CHECK(decay_fidelity(DecayFamily::Exponential, 0.8, 100.0, 100.0) == doctest::Approx(0.5 * (1 + 0.8 / M_E)));
  CHECK(decay_fidelity(DecayFamily::Gaussian, 1.0, 100.0, 200.0) == doctest::Approx(0.5 * (1 + std::exp(-4.0))));
  CHECK(parse_family("Gaussian") == DecayFamily::Gaussian);
  CHECK(parse_family("exponential") == DecayFamily::Exponential);
  CHECK_THROWS_AS(parse_family("linear"), ConfigError);
}

TEST_CASE("dataset validation and csv") {
  DecayDataset d;
  CHECK_THROWS_AS(d.add(-1.0, 10, 5), ConfigError);
  CHECK_THROWS_AS(d.add(1.0, 0, 0), ConfigError);
  CHECK_THROWS_AS(d.add(1.0, 10, 11), ConfigError);
  d.add_fidelity(5.0, 200, 0.935);
  CHECK(d.records().front().successes == 187);
  CHECK_THROWS_AS(d.add_fidelity(5.0, 200, 0.9351), ConfigError);

  std::istringstream in("T_seconds, repetitions, successes\n0,100,99\n1000,100,80\r\n\n2000,100,71\n");
  const auto data = DecayDataset::read_csv(in);
  CHECK(data.size() == 3);
  CHECK(data.distinct_times() == 3);
  CHECK(data.max_time() == 2000.0);
  std::stringstream out;
  data.write_csv(out);
  const auto back = DecayDataset::read_csv(out);
  CHECK(back.records()[1].successes == 80);

  std::istringstream empty("");
  CHECK_THROWS_AS(DecayDataset::read_csv(empty), ConfigError);
  std::istringstream bad_header("T,R,k\n1,2,1\n");
  CHECK_THROWS_AS(DecayDataset::read_csv(bad_header), ConfigError);
  std::istringstream bad_number("T_seconds,repetitions,successes\n1,2x,1\n");
  CHECK_THROWS_AS(DecayDataset::read_csv(bad_number), ConfigError);
  std::istringstream bad_count("T_seconds,repetitions,successes\n1,2,3\n");
  CHECK_THROWS_AS(DecayDataset::read_csv(bad_count), ConfigError);
}

TEST_CASE("log likelihood trivial values") {
  CHECK(log_likelihood(DecayFamily::Exponential, 0.9, 10.0, DecayDataset{}) == 0.0);
  DecayDataset d;
  d.add(0.0, 10, 10);
  CHECK(log_likelihood(DecayFamily::Exponential, 1.0, 10.0, d) == 0.0);
  DecayDataset conflict;
  conflict.add(0.0, 10, 9);
  CHECK(std::isinf(log_likelihood(DecayFamily::Exponential, 1.0, 10.0, conflict)));
}

TEST_CASE("log likelihood matches a 50-digit evaluation") {
  using big = boost::multiprecision::cpp_bin_float_50;
  const double A = 0.93;
  const double tau = 700.0;
  DecayDataset d;
  d.add(tau, 100, 63);
  d.add(0.0, 250, 240);
  d.add(1800.0, 1000, 561);
  big expected = 0;
  for (const auto& r : d.records()) {
    const big R = r.repetitions, k = r.successes;
    const big F = (1 + big(A) * exp(-big(r.T) / big(tau))) / 2;
    expected += lgamma(R + 1) - lgamma(k + 1) - lgamma(R - k + 1) + k * log(F) + (R - k) * log(1 - F);
  }
  const double got = log_likelihood(DecayFamily::Exponential, A, tau, d);
  CHECK(std::abs(got - expected.convert_to<double>()) < 1e-9 * std::abs(got));
}

TEST_CASE("log likelihood is permutation invariant") {
  DecayDataset a, b;
  a.add(0.0, 100, 97);
  a.add(500.0, 100, 80);
  a.add(900.0, 50, 33);
  b.add(900.0, 50, 33);
  b.add(0.0, 100, 97);
  b.add(500.0, 100, 80);
  CHECK(log_likelihood(DecayFamily::Gaussian, 0.9, 800.0, a) ==
        doctest::Approx(log_likelihood(DecayFamily::Gaussian, 0.9, 800.0, b)).epsilon(1e-14));
}

TEST_CASE("noiseless exponential data is recovered") {
  const auto d = noiseless(DecayFamily::Exponential, 1.0, 100.0, {0.0, 50.0, 100.0, 200.0}, 1000000);
  const auto fit = fit_mle(DecayFamily::Exponential, d);
  CHECK_FALSE(fit.unidentifiable);
  CHECK(std::abs(fit.A_hat - 1.0) < 5e-3);
  CHECK(std::abs(fit.tau_hat - 100.0) / 100.0 < 5e-3);
}

TEST_CASE("flat data is flagged unidentifiable") {
  DecayDataset d;
  for (double T : {0.0, 100.0, 200.0, 400.0}) d.add(T, 1000, 500);
  const auto fit = fit_mle(DecayFamily::Exponential, d);
  CHECK(fit.unidentifiable);
  CHECK(fit.A_hat == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fit preconditions") {
  DecayDataset one;
  one.add(10.0, 100, 90);
  one.add(10.0, 100, 91);
  CHECK_THROWS_AS(fit_mle(DecayFamily::Exponential, one), ConfigError);
}

TEST_CASE("fit matches a brute-force grid search") {
  const double times[] = {0.0, 300.0, 700.0, 1200.0, 2000.0, 3500.0};
  for (auto family : {DecayFamily::Exponential, DecayFamily::Gaussian}) {
    const auto d = sampled(family, 0.9, 1500.0, times, 200, family == DecayFamily::Exponential ? 1 : 2);
    const auto fit = fit_mle(family, d);
    const double log_lo = std::log(35.0), log_hi = std::log(350000.0);
    constexpr int nA = 401, nT = 2001;
    double best = -INFINITY, bestA = 0, bestT = 0;
    for (int i = 0; i < nA; ++i) {
      const double A = static_cast<double>(i) / (nA - 1);
      for (int j = 0; j < nT; ++j) {
        const double tau = std::exp(log_lo + (log_hi - log_lo) * j / (nT - 1));
        const double v = log_likelihood(family, A, tau, d);
        if (v > best) best = v, bestA = A, bestT = tau;
      }
    }
    const double dlog = (log_hi - log_lo) / (nT - 1);
    CHECK(fit.loglik >= best - 1e-9);
    CHECK(std::abs(fit.A_hat - bestA) <= 1.0 / (nA - 1));
    CHECK(std::abs(std::log(fit.tau_hat / bestT)) <= dlog);
  }
}

TEST_CASE("rescaling times rescales tau") {
  const double times[] = {0.0, 200.0, 500.0, 900.0};
  const auto d = sampled(DecayFamily::Exponential, 0.95, 600.0, times, 300, 7);
  const auto fit = fit_mle(DecayFamily::Exponential, d);
  for (double c : {4.0, 3.0}) {
    DecayDataset scaled;
    for (const auto& r : d.records()) scaled.add(r.T * c, r.repetitions, r.successes);
    const auto f2 = fit_mle(DecayFamily::Exponential, scaled);
    CHECK(f2.A_hat == doctest::Approx(fit.A_hat).epsilon(1e-12));
    CHECK(f2.tau_hat == doctest::Approx(fit.tau_hat * c).epsilon(1e-12));
  }
}

TEST_CASE("central ranks") {
  CHECK(central_ranks(100, 0.68) == std::pair<std::size_t, std::size_t>{17, 84});
  CHECK(central_ranks(1000, 0.68) == std::pair<std::size_t, std::size_t>{161, 840});
  CHECK_THROWS_AS(central_ranks(100, 1.0), ConfigError);
}

TEST_CASE("tau interval order statistics") {
  std::vector<BootstrapSample> s;
  for (int i = 100; i >= 1; --i) s.push_back({1.0, static_cast<double>(i), false});
  const auto [lo, hi] = tau_interval(s, 0.68);
  CHECK(lo == 17.0);
  CHECK(hi == 84.0);
  std::vector<BootstrapSample> same(150, BootstrapSample{0.9, 42.0, false});
  CHECK(tau_interval(same) == std::pair<double, double>{42.0, 42.0});
  same.resize(120);
  for (int i = 0; i < 30; ++i) same[i].excluded = true;
  CHECK_THROWS_AS(tau_interval(same), ConfigError);
}

TEST_CASE("curve band") {
  std::vector<BootstrapSample> ones(200, BootstrapSample{1.0, 50.0, false});
  CHECK(curve_band(ones, DecayFamily::Exponential, 0.0) == std::pair<double, double>{1.0, 1.0});
  std::vector<BootstrapSample> spread;
  for (int i = 0; i < 200; ++i) spread.push_back({0.5 + 0.0025 * i, 40.0 + i, false});
  const auto [lo, hi] = curve_band(spread, DecayFamily::Exponential, 100.0);
  CHECK(lo >= 0.5);
  CHECK(hi <= 1.0);
  CHECK(lo < hi);
}

TEST_CASE("bootstrap determinism and thread independence") {
  const double times[] = {0.0, 1000.0, 3000.0, 6000.0};
  const auto d = sampled(DecayFamily::Exponential, 0.96, 5000.0, times, 100, 3);
  const auto fit = fit_mle(DecayFamily::Exponential, d);
  CHECK(bootstrap(fit, d, 0, 1).empty());
  const auto a = bootstrap(fit, d, 40, 99, {}, 1);
  const auto b = bootstrap(fit, d, 40, 99, {}, 4);
  REQUIRE(a.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].A == b[i].A);
    CHECK(a[i].tau == b[i].tau);
    CHECK(a[i].excluded == b[i].excluded);
  }
  const auto c = bootstrap(fit, d, 40, 100, {}, 1);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].tau != c[i].tau;
  CHECK(differs);
}

TEST_CASE("band narrows toward its quantile limit as samples grow") {
  const double times[] = {0.0, 500.0, 1000.0, 2000.0, 4000.0};
  const auto d = sampled(DecayFamily::Exponential, 0.9, 2000.0, times, 400, 5);
  const auto fit = fit_mle(DecayFamily::Exponential, d);
  const auto small = bootstrap(fit, d, 200, 1);
  const auto large = bootstrap(fit, d, 400, 1);
  const auto b1 = curve_band(small, fit.model, fit.tau_hat);
  const auto b2 = curve_band(large, fit.model, fit.tau_hat);
  CHECK(b1.first >= 0.5);
  CHECK(b1.second <= 1.0);
  const double w1 = b1.second - b1.first, w2 = b2.second - b2.first;
  CHECK(std::abs(w2 - w1) / w1 < 0.25);
}

TEST_CASE("short storage range gives a right-skewed tau interval") {
  const double times[] = {0.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0};
  const auto d = sampled(DecayFamily::Exponential, 0.96, 7900.0, times, 100, 11);
  const auto fit = fit_mle(DecayFamily::Exponential, d);
  const auto s = bootstrap(fit, d, 300, 12);
  std::vector<double> taus;
  for (const auto& x : s) {
    if (!x.excluded) taus.push_back(x.tau);
  }
  std::sort(taus.begin(), taus.end());
  const double median = taus[taus.size() / 2];
  const auto [lo, hi] = tau_interval(s);
  CHECK(hi - median > median - lo);
}
