#include "dfsmem/fitting.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/tools/minima.hpp>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <thread>

#include "dfsmem/error.hpp"
#include "dfsmem/rng.hpp"

namespace dfsmem {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double decay_envelope(DecayFamily family, double tau, double T) {
  const double x = T / tau;
  return family == DecayFamily::Exponential ? std::exp(-x) : std::exp(-x * x);
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(const std::string& text, int line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("CSV line {}: malformed number '{}'", line_no, text));
  }
  return value;
}

// Log-likelihood without the parameter-free binomial coefficients. Times are
// in the same unit as tau.
struct Objective {
  DecayFamily family;
  std::vector<double> t;
  std::vector<double> k;
  std::vector<double> f;  // failures

  double operator()(double A, double tau) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double ae = A * decay_envelope(family, tau, t[i]);
      const double p = 0.5 * (1.0 + ae);
      const double q = 0.5 * (1.0 - ae);
      if (k[i] > 0.0) {
        if (p <= 0.0) return kNegInf;
        sum += k[i] * std::log(p);
      }
      if (f[i] > 0.0) {
        if (q <= 0.0) return kNegInf;
        sum += f[i] * std::log(q);
      }
    }
    return sum;
  }
};

struct ProfilePoint {
  double A = 0.0;
  double value = kNegInf;
};

class Profiler {
 public:
  Profiler(const Objective& obj, int amp_grid, int bits) : obj_(obj), amp_grid_(std::max(amp_grid, 3)), bits_(bits) {}

  // max over A in [0, 1] at fixed tau; the objective is concave in A.
  ProfilePoint operator()(double tau) const {
    ProfilePoint best;
    int best_j = 0;
    const int n = amp_grid_;
    for (int j = 0; j < n; ++j) {
      const double A = static_cast<double>(j) / (n - 1);
      const double v = obj_(A, tau);
      if (v > best.value) {
        best = {A, v};
        best_j = j;
      }
    }
    const double lo = static_cast<double>(std::max(best_j - 1, 0)) / (n - 1);
    const double hi = static_cast<double>(std::min(best_j + 1, n - 1)) / (n - 1);
    std::uintmax_t iters = 200;
    const auto [A, negv] = boost::math::tools::brent_find_minima(
        [&](double a) {
          const double v = obj_(a, tau);
          return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
        },
        lo, hi, bits_, iters);
    if (-negv > best.value) best = {A, -negv};
    return best;
  }

 private:
  const Objective& obj_;
  int amp_grid_;
  int bits_;
};

}  // namespace

std::string_view family_name(DecayFamily family) {
  return family == DecayFamily::Exponential ? "exponential" : "gaussian";
}

DecayFamily parse_family(std::string_view text) {
  std::string lower(text);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "exponential" || lower == "exp") return DecayFamily::Exponential;
  if (lower == "gaussian" || lower == "gauss") return DecayFamily::Gaussian;
  throw ConfigError(fmt::format("unknown decay model '{}' (expected exponential or gaussian)", text));
}

double decay_fidelity(DecayFamily family, double A, double tau, double T) {
  return 0.5 * (1.0 + A * decay_envelope(family, tau, T));
}

DecayDataset::DecayDataset(std::vector<DecayRecord> records) {
  for (const auto& r : records) add(r.T, r.repetitions, r.successes);
}

void DecayDataset::add(double T, std::int64_t repetitions, std::int64_t successes) {
  if (!std::isfinite(T) || T < 0.0) throw ConfigError(fmt::format("storage time must be >= 0, got {}", T));
  if (repetitions < 1) throw ConfigError(fmt::format("repetitions must be >= 1, got {}", repetitions));
  if (successes < 0 || successes > repetitions) {
    throw ConfigError(fmt::format("successes {} outside [0, {}]", successes, repetitions));
  }
  records_.push_back({T, repetitions, successes});
}

void DecayDataset::add_fidelity(double T, std::int64_t repetitions, double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw ConfigError(fmt::format("fidelity {} outside [0, 1]", fidelity));
  const double count = fidelity * static_cast<double>(repetitions);
  const double rounded = std::round(count);
  if (std::abs(count - rounded) > 1e-9) {
    throw ConfigError(fmt::format("F*R = {} is not an integer success count", count));
  }
  add(T, repetitions, static_cast<std::int64_t>(rounded));
}

double DecayDataset::max_time() const {
  double m = 0.0;
  for (const auto& r : records_) m = std::max(m, r.T);
  return m;
}

std::size_t DecayDataset::distinct_times() const {
  std::set<double> times;
  for (const auto& r : records_) times.insert(r.T);
  return times.size();
}

DecayDataset DecayDataset::read_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  DecayDataset data;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!have_header) {
      if (fields != std::vector<std::string>{"T_seconds", "repetitions", "successes"}) {
        throw ConfigError(
            fmt::format("CSV line {}: expected header 'T_seconds,repetitions,successes', got '{}'", line_no, line));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 3) throw ConfigError(fmt::format("CSV line {}: expected 3 fields", line_no));
    data.add(parse_number<double>(fields[0], line_no), parse_number<std::int64_t>(fields[1], line_no),
             parse_number<std::int64_t>(fields[2], line_no));
  }
  if (!have_header) throw ConfigError("CSV is empty: missing 'T_seconds,repetitions,successes' header");
  return data;
}

void DecayDataset::write_csv(std::ostream& out) const {
  out << "T_seconds,repetitions,successes\n";
  for (const auto& r : records_) out << fmt::format("{},{},{}\n", r.T, r.repetitions, r.successes);
}

double log_likelihood(DecayFamily family, double A, double tau, const DecayDataset& data) {
  double sum = 0.0;
  for (const auto& r : data.records()) {
    const auto R = static_cast<double>(r.repetitions);
    const auto k = static_cast<double>(r.successes);
    const double ae = A * decay_envelope(family, tau, r.T);
    const double p = 0.5 * (1.0 + ae);
    const double q = 0.5 * (1.0 - ae);
    sum += std::lgamma(R + 1.0) - std::lgamma(k + 1.0) - std::lgamma(R - k + 1.0);
    if (k > 0.0) {
      if (p <= 0.0) return kNegInf;
      sum += k * std::log(p);
    }
    if (R - k > 0.0) {
      if (q <= 0.0) return kNegInf;
      sum += (R - k) * std::log(q);
    }
  }
  return sum;
}

FitResult fit_mle(DecayFamily family, const DecayDataset& data, const SearchConfig& config) {
  if (data.distinct_times() < 2) {
    throw ConfigError("lifetime fit needs records at two or more distinct storage times");
  }
  if (config.tau_grid < 3 || config.amp_grid < 3) throw ConfigError("search grids need at least 3 points");
  if (!(config.rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");

  // Work in units of the longest storage time so that rescaling every T_i
  // rescales tau_hat by the same factor.
  const double scale = data.max_time();
  Objective obj{family, {}, {}, {}};
  for (const auto& r : data.records()) {
    obj.t.push_back(r.T / scale);
    obj.k.push_back(static_cast<double>(r.successes));
    obj.f.push_back(static_cast<double>(r.repetitions - r.successes));
  }
  const double u_min = config.tau_min > 0.0 ? config.tau_min / scale : 0.01;
  const double u_max = config.tau_max > 0.0 ? config.tau_max / scale : 100.0;
  if (!(u_min < u_max)) throw ConfigError("tau_min must be below tau_max");

  const int bits = std::clamp(static_cast<int>(std::ceil(-std::log2(config.rel_tol))) + 4, 12, 40);
  const Profiler profile(obj, config.amp_grid, bits);

  const int n = config.tau_grid;
  std::vector<double> grid(n);
  std::vector<ProfilePoint> values(n);
  const double log_lo = std::log(u_min);
  const double log_hi = std::log(u_max);
  int best = 0;
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
    values[i] = profile(grid[i]);
    if (values[i].value > values[best].value) best = i;
    lowest = std::min(lowest, values[i].value);
  }

  FitResult result;
  result.model = family;
  if (!std::isfinite(values[best].value)) throw NumericalError("log-likelihood is -infinity on the whole grid");

  if (values[best].value - lowest < config.flat_tol) {
    result.unidentifiable = true;
    result.A_hat = values[best].A;
    result.tau_hat = grid[best] * scale;
    result.loglik = log_likelihood(family, result.A_hat, result.tau_hat, data);
    return result;
  }

  const double lo = std::log(grid[std::max(best - 1, 0)]);
  const double hi = std::log(grid[std::min(best + 1, n - 1)]);
  std::uintmax_t iters = 500;
  const auto [log_u, neg] = boost::math::tools::brent_find_minima(
      [&](double lu) {
        const double v = profile(std::exp(lu)).value;
        return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
      },
      lo, hi, bits, iters);

  double u_hat = std::exp(log_u);
  ProfilePoint at = profile(u_hat);
  if (values[best].value > at.value) {
    u_hat = grid[best];
    at = values[best];
  }
  result.A_hat = at.A;
  result.tau_hat = u_hat * scale;
  result.loglik = log_likelihood(family, result.A_hat, result.tau_hat, data);
  return result;
}

std::vector<BootstrapSample> bootstrap(const FitResult& fit, const DecayDataset& design, int n_samples,
                                       std::uint64_t seed, const SearchConfig& config, int threads) {
  if (n_samples < 0) throw ConfigError("bootstrap sample count must be >= 0");
  std::vector<BootstrapSample> samples(static_cast<std::size_t>(n_samples));
  if (n_samples == 0) return samples;

  auto run_one = [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    DecayDataset synthetic;
    for (const auto& r : design.records()) {
      const double p = decay_fidelity(fit.model, fit.A_hat, fit.tau_hat, r.T);
      synthetic.add(r.T, r.repetitions, rng.binomial(r.repetitions, p));
    }
    const FitResult refit = fit_mle(fit.model, synthetic, config);
    samples[i] = {refit.A_hat, refit.tau_hat, refit.unidentifiable};
  };

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n_samples));
  if (workers <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) run_one(i);
    return samples;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < samples.size(); i = next++) {
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return samples;
}

std::pair<std::size_t, std::size_t> central_ranks(std::size_t n, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError(fmt::format("confidence level {} outside (0, 1)", level));
  if (n == 0) throw ConfigError("no samples");
  // The small offset keeps exact products such as 100 * 0.16 from rounding down.
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - level) / 2.0 + 1e-9));
  return {k + 1, n - k};
}

namespace {

std::vector<BootstrapSample> retained(std::span<const BootstrapSample> samples) {
  std::vector<BootstrapSample> kept;
  for (const auto& s : samples) {
    if (!s.excluded) kept.push_back(s);
  }
  if (kept.size() < 100) {
    throw ConfigError(fmt::format("confidence intervals need >= 100 retained bootstrap samples, have {}", kept.size()));
  }
  return kept;
}

std::pair<double, double> central_interval(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const auto [lo, hi] = central_ranks(values.size(), level);
  return {values[lo - 1], values[hi - 1]};
}

}  // namespace

std::pair<double, double> tau_interval(std::span<const BootstrapSample> samples, double level) {
  const auto kept = retained(samples);
  std::vector<double> taus;
  taus.reserve(kept.size());
  for (const auto& s : kept) taus.push_back(s.tau);
  return central_interval(std::move(taus), level);
}

std::pair<double, double> curve_band(std::span<const BootstrapSample> samples, DecayFamily family, double T,
                                     double level) {
  const auto kept = retained(samples);
  std::vector<double> values;
  values.reserve(kept.size());
  for (const auto& s : kept) values.push_back(decay_fidelity(family, s.A, s.tau, T));
  return central_interval(std::move(values), level);
}

}  // namespace dfsmem
