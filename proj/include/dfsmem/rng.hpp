#pragma once

#include <cstdint>
#include <random>

namespace dfsmem {

/// SplitMix64 finalizer. Used as the fixed mixing function for counter-based
/// seed derivation, so that task i of a run always sees the same stream no
/// matter how tasks are scheduled.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for sub-task `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Uniform double in [0, 1) built from the top 53 bits of a 64-bit word.
double to_unit_interval(std::uint64_t bits) noexcept;

/// Counter-based standard normal draw (Box-Muller on two derived words).
double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept;

/// Seeded generator used by every sampler in the toolkit.
///
/// Uniform and binomial draws are implemented here rather than through the
/// <random> distributions so that sample streams are identical across
/// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return to_unit_interval(engine_()); }

  /// Binomial(n, p). Exact inverse-CDF for n <= 10^4; above that the
  /// standard-library sampler is used.
  std::int64_t binomial(std::int64_t n, double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Smallest k with CDF(k) > u for Binomial(n, p), computed exactly from the
/// probability mass function.
std::int64_t binomial_inverse_cdf(std::int64_t n, double p, double u);

}  // namespace dfsmem
