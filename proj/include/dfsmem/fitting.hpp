#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dfsmem {

enum class DecayFamily { Exponential, Gaussian };

std::string_view family_name(DecayFamily family);
/// Accepts "exponential" / "gaussian" (case-insensitive).
DecayFamily parse_family(std::string_view text);

/// F(T; A, tau) = (1 + A e^{-T/tau}) / 2, or with e^{-T^2/tau^2}.
double decay_fidelity(DecayFamily family, double A, double tau, double T);

struct DecayRecord {
  double T = 0.0;  // seconds
  std::int64_t repetitions = 0;
  std::int64_t successes = 0;

  double fidelity() const { return static_cast<double>(successes) / static_cast<double>(repetitions); }
};

/// (T_i, R_i, k_i) records. Success counts are stored as integers so that
/// F_i R_i is integral by construction.
class DecayDataset {
 public:
  DecayDataset() = default;
  explicit DecayDataset(std::vector<DecayRecord> records);

  /// Throws ConfigError on T < 0, R < 1 or k outside [0, R].
  void add(double T, std::int64_t repetitions, std::int64_t successes);
  /// Accepts a mean fidelity; F * R must be integral within 1e-9.
  void add_fidelity(double T, std::int64_t repetitions, double fidelity);

  const std::vector<DecayRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  double max_time() const;
  std::size_t distinct_times() const;

  /// CSV with header `T_seconds,repetitions,successes`.
  static DecayDataset read_csv(std::istream& in);
  void write_csv(std::ostream& out) const;

 private:
  std::vector<DecayRecord> records_;
};

/// Binomial log-likelihood with 0 ln 0 = 0. Returns -infinity when the model
/// puts probability 0 on an observed outcome.
double log_likelihood(DecayFamily family, double A, double tau, const DecayDataset& data);

struct SearchConfig {
  /// Non-positive bounds select the defaults max(T)/100 and max(T)*100.
  double tau_min = 0.0;
  double tau_max = 0.0;
  int tau_grid = 60;  // log-spaced
  int amp_grid = 21;  // linear in [0, 1]
  double rel_tol = 1e-6;
  /// Profile variation below this flags tau as unidentifiable.
  double flat_tol = 1e-6;
};

struct BootstrapSample {
  double A = 0.0;
  double tau = 0.0;
  bool excluded = false;  // refit was unidentifiable
};

struct FitResult {
  DecayFamily model = DecayFamily::Exponential;
  double A_hat = 0.0;
  double tau_hat = 0.0;
  double loglik = 0.0;
  bool unidentifiable = false;
  std::vector<BootstrapSample> bootstrap;
  std::size_t n_excluded = 0;
  std::uint64_t seed = 0;
};

/// Maximum-likelihood (A, tau) over A in [0, 1], tau in [tau_min, tau_max].
/// Coarse grid (log tau x linear A), then the profile likelihood over A is
/// maximized exactly at each tau and tau is refined by Brent's method around
/// the best grid cell. Throws ConfigError when fewer than two distinct times
/// are present.
FitResult fit_mle(DecayFamily family, const DecayDataset& data, const SearchConfig& config = {});

/// Parametric bootstrap: for each sample, redraw k_i ~ Binomial(R_i,
/// F(T_i; A_hat, tau_hat)) at the design points of `design`, refit and record.
/// Sample i uses seed derive_seed(seed, i), so the output does not depend on
/// `threads` (0 = hardware concurrency).
std::vector<BootstrapSample> bootstrap(const FitResult& fit, const DecayDataset& design, int n_samples,
                                       std::uint64_t seed, const SearchConfig& config = {}, int threads = 0);

/// Ranks (1-based, inclusive) of the central interval used throughout: with
/// k = floor(n (1 - level) / 2), the interval spans order statistics k+1..n-k.
std::pair<std::size_t, std::size_t> central_ranks(std::size_t n, double level);

/// Central interval of the tau marginal over retained samples. Throws
/// ConfigError with fewer than 100 retained samples.
std::pair<double, double> tau_interval(std::span<const BootstrapSample> samples, double level = 0.68);

/// Pointwise central interval of F(T; A_s, tau_s).
std::pair<double, double> curve_band(std::span<const BootstrapSample> samples, DecayFamily family, double T,
                                     double level = 0.68);

}  // namespace dfsmem
