#include "dfsmem/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace dfsmem {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept {
  const std::uint64_t base = derive_seed(seed, counter);
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - to_unit_interval(mix64(base));
  const double u2 = to_unit_interval(mix64(base ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t binomial_inverse_cdf(std::int64_t n, double p, double u) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;

  // Fill the pmf outward from the mode so that nothing underflows before it
  // matters, then accumulate from k = 0.
  const auto mode = std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor((n + 1) * p)));
  const double log_mode = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) - std::lgamma(n - mode + 1.0) +
                          mode * std::log(p) + (n - mode) * std::log1p(-p);
  std::vector<double> pmf(static_cast<std::size_t>(n + 1), 0.0);
  pmf[mode] = std::exp(log_mode);
  const double odds = p / (1.0 - p);
  for (std::int64_t k = mode; k < n; ++k) {
    pmf[k + 1] = pmf[k] * odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  for (std::int64_t k = mode; k > 0; --k) {
    pmf[k - 1] = pmf[k] / odds * static_cast<double>(k) / static_cast<double>(n - k + 1);
  }

  double total = 0.0;
  for (double v : pmf) total += v;
  const double threshold = u * total;
  double cdf = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    cdf += pmf[k];
    if (cdf > threshold) return k;
  }
  return n;
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  if (n <= 10000) return binomial_inverse_cdf(n, p, uniform());
  std::binomial_distribution<std::int64_t> dist(n, std::clamp(p, 0.0, 1.0));
  return dist(engine_);
}

}  // namespace dfsmem
