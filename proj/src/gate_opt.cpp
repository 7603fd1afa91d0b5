#include "dfsmem/gate_opt.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "dfsmem/error.hpp"
#include "dfsmem/rng.hpp"

namespace dfsmem {

namespace {

using cd = std::complex<double>;
using std::numbers::pi;
constexpr cd kI{0.0, 1.0};

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// int_lo^hi exp(i w t) dt
cd phase_integral(double w, double lo, double hi) {
  const double L = hi - lo;
  return std::exp(kI * (w * 0.5 * (lo + hi))) * (L * sinc(0.5 * w * L));
}

// One smooth stretch of the drive: amplitude is flat, or (1 - cos(kappa (t - ref)))/2.
struct Piece {
  double lo;
  double hi;
  double phase;
  bool ramp;
  double ref;
};

class Drive {
 public:
  Drive(const PhaseSequence& seq, const DriveProfile& drive) : amplitude_(drive.base_amplitude) {
    seq.validate();
    const double s = seq.segment_duration();
    const double tr = drive.ramped ? seq.ramp_time : 0.0;
    kappa_ = tr > 0.0 ? pi / tr : 0.0;
    for (std::size_t k = 0; k < seq.n_segments(); ++k) {
      const double a = s * static_cast<double>(k);
      const double b = k + 1 == seq.n_segments() ? seq.total_duration : a + s;
      const double phi = seq.phases[k];
      if (tr > 0.0) {
        pieces_.push_back({a, a + tr, phi, true, a});
        if (b - tr > a + tr) pieces_.push_back({a + tr, b - tr, phi, false, 0.0});
        pieces_.push_back({b - tr, b, phi, true, b});
      } else {
        pieces_.push_back({a, b, phi, false, 0.0});
      }
    }
  }

  const std::vector<Piece>& pieces() const { return pieces_; }
  double amplitude() const { return amplitude_; }

  double envelope(const Piece& p, double t) const {
    return p.ramp ? amplitude_ * 0.5 * (1.0 - std::cos(kappa_ * (t - p.ref))) : amplitude_;
  }

  // int over [lo, hi] (inside p) of Omega(t) exp(i(delta t + phi)) dt
  cd integral(const Piece& p, double delta, double lo, double hi) const {
    cd v = phase_integral(delta, lo, hi);
    if (p.ramp) {
      v = 0.5 * v - 0.25 * (std::exp(-kI * (kappa_ * p.ref)) * phase_integral(delta + kappa_, lo, hi) +
                            std::exp(kI * (kappa_ * p.ref)) * phase_integral(delta - kappa_, lo, hi));
    }
    return amplitude_ * std::exp(kI * p.phase) * v;
  }

 private:
  double amplitude_;
  double kappa_ = 0.0;
  std::vector<Piece> pieces_;
};

}  // namespace

std::vector<double> ModeSet::detunings() const {
  std::vector<double> d;
  d.reserve(mode_freqs.size());
  for (double w : mode_freqs) d.push_back(mu - w);
  return d;
}

void ModeSet::validate() const {
  if (mode_freqs.empty()) throw ConfigError("at least one motional mode is required");
  for (double w : mode_freqs) {
    if (!std::isfinite(w)) throw ConfigError("mode frequencies must be finite");
  }
  if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
}

ModeSet ModeSet::three_ion_transverse() {
  const double mhz = 2 * pi * 1e6;
  return {{1.298 * mhz, 1.347 * mhz, 1.381 * mhz}, 1.396 * mhz};
}

void PhaseSequence::validate() const {
  if (phases.empty()) throw ConfigError("phase sequence has no segments");
  for (double p : phases) {
    if (!std::isfinite(p)) throw ConfigError("phases must be finite");
  }
  if (!std::isfinite(total_duration) || total_duration <= 0.0) {
    throw ConfigError(fmt::format("duration must be positive, got {}", total_duration));
  }
  if (!std::isfinite(ramp_time) || ramp_time < 0.0 || 2.0 * ramp_time > segment_duration() * (1.0 + 1e-12)) {
    throw ConfigError(fmt::format("ramp {} s does not fit twice in a {} s segment", ramp_time, segment_duration()));
  }
  if (antisymmetric) {
    const std::size_t n = phases.size();
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(phases[k] + phases[n - 1 - k]) > 1e-12) {
        throw ConfigError(fmt::format("phases[{}] = {} breaks anti-symmetry with phases[{}] = {}", k, phases[k],
                                      n - 1 - k, phases[n - 1 - k]));
      }
    }
  }
}

PhaseSequence PhaseSequence::from_half(std::span<const double> half, double duration, double ramp) {
  PhaseSequence seq;
  seq.phases.assign(half.begin(), half.end());
  for (auto it = half.rbegin(); it != half.rend(); ++it) seq.phases.push_back(-*it);
  seq.total_duration = duration;
  seq.ramp_time = ramp;
  seq.antisymmetric = true;
  return seq;
}

void PhaseSequence::write(std::ostream& out) const {
  out << "n_segments = " << phases.size() << '\n';
  out << fmt::format("duration_s = {}\n", total_duration);
  out << fmt::format("ramp_s = {}\n", ramp_time);
  out << "antisymmetric = " << (antisymmetric ? "true" : "false") << '\n';
  out << "phases =";
  for (double p : phases) out << fmt::format(" {}", p);
  out << '\n';
}

PhaseSequence PhaseSequence::read(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("sequence line {}: expected key = value", line_no));
    std::istringstream key_stream(line.substr(0, eq));
    std::string key;
    key_stream >> key;
    if (!kv.emplace(key, line.substr(eq + 1)).second) {
      throw ConfigError(fmt::format("sequence line {}: duplicate key '{}'", line_no, key));
    }
  }
  for (const auto& [key, value] : kv) {
    if (key != "n_segments" && key != "duration_s" && key != "ramp_s" && key != "antisymmetric" && key != "phases") {
      throw ConfigError(fmt::format("unknown sequence key '{}'", key));
    }
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(fmt::format("sequence file lacks '{}'", key));
    return it->second;
  };
  auto number = [&](const std::string& key) {
    std::istringstream ss(need(key));
    double v = 0.0;
    std::string rest;
    if (!(ss >> v) || (ss >> rest)) throw ConfigError(fmt::format("sequence key '{}' is not a number", key));
    return v;
  };

  PhaseSequence seq;
  seq.total_duration = number("duration_s");
  seq.ramp_time = number("ramp_s");
  std::istringstream flag(need("antisymmetric"));
  std::string f;
  flag >> f;
  if (f != "true" && f != "false") throw ConfigError("antisymmetric must be true or false");
  seq.antisymmetric = f == "true";
  std::string phase_text = need("phases");
  std::replace(phase_text.begin(), phase_text.end(), ',', ' ');
  std::istringstream ps(phase_text);
  double p = 0.0;
  while (ps >> p) seq.phases.push_back(p);
  if (!ps.eof()) throw ConfigError("phases must be a list of numbers");
  const double n = number("n_segments");
  if (n != static_cast<double>(seq.phases.size())) {
    throw ConfigError(fmt::format("n_segments = {} but {} phases were given", n, seq.phases.size()));
  }
  seq.validate();
  return seq;
}

double drive_amplitude(const PhaseSequence& seq, const DriveProfile& drive, double t) {
  if (t < 0.0 || t > seq.total_duration) return 0.0;
  const Drive d(seq, drive);
  for (const auto& p : d.pieces()) {
    if (t <= p.hi) return d.envelope(p, t);
  }
  return d.envelope(d.pieces().back(), t);
}

std::complex<double> displacement(const PhaseSequence& seq, const DriveProfile& drive, double delta) {
  const Drive d(seq, drive);
  cd alpha = 0.0;
  for (const auto& p : d.pieces()) alpha += d.integral(p, delta, p.lo, p.hi);
  return alpha;
}

std::vector<double> mode_residuals(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes) {
  modes.validate();
  const Drive d(seq, drive);
  const double scale = drive.base_amplitude * seq.total_duration;
  std::vector<double> out;
  for (double delta : modes.detunings()) {
    if (scale == 0.0) {
      out.push_back(0.0);
      continue;
    }
    cd alpha = 0.0;
    for (const auto& p : d.pieces()) alpha += d.integral(p, delta, p.lo, p.hi);
    out.push_back(std::norm(alpha) / (scale * scale));
  }
  return out;
}

double closure_residual(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes) {
  const auto r = mode_residuals(seq, drive, modes);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

double geometric_phase(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes,
                       std::span<const double> couplings) {
  modes.validate();
  if (couplings.size() != modes.mode_freqs.size()) {
    throw ConfigError(fmt::format("{} couplings given for {} modes", couplings.size(), modes.mode_freqs.size()));
  }
  const Drive d(seq, drive);
  using Rule = boost::math::quadrature::gauss<double, 30>;
  const auto deltas = modes.detunings();
  double theta = 0.0;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const double delta = deltas[j];
    cd prefix = 0.0;
    double im = 0.0;
    for (const auto& p : d.pieces()) {
      auto integrand = [&](double t) {
        const cd f = d.envelope(p, t) * std::exp(kI * (delta * t + p.phase));
        const cd A = prefix + d.integral(p, delta, p.lo, t);
        return (f * std::conj(A)).imag();
      };
      im += Rule::integrate(integrand, p.lo, p.hi);
      prefix += d.integral(p, delta, p.lo, p.hi);
    }
    theta += couplings[j] * im;
  }
  return theta;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) return {x0, f(x0), 0};
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step;
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto along = [&](double t, std::vector<double>& out) {
    const auto& worst = simplex[order[n]];
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (worst[k] - centroid[k]);
  };

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double spread = values[order[n]] - values[order[0]];
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        diameter = std::max(diameter, std::abs(simplex[order[i]][k] - simplex[order[0]][k]));
      }
    }
    if (spread <= options.f_tol || diameter <= options.x_tol) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[order[i]][k] / static_cast<double>(n);
    }
    const double best = values[order[0]];
    const double second_worst = values[order[n - 1]];
    const double worst = values[order[n]];

    along(-1.0, trial);
    const double fr = f(trial);
    if (fr < best) {
      along(-2.0, trial2);
      const double fe = f(trial2);
      if (fe < fr) {
        simplex[order[n]] = trial2;
        values[order[n]] = fe;
      } else {
        simplex[order[n]] = trial;
        values[order[n]] = fr;
      }
      continue;
    }
    if (fr < second_worst) {
      simplex[order[n]] = trial;
      values[order[n]] = fr;
      continue;
    }
    if (fr < worst) {
      along(-0.5, trial2);
      const double fc = f(trial2);
      if (fc <= fr) {
        simplex[order[n]] = trial2;
        values[order[n]] = fc;
        continue;
      }
    } else {
      along(0.5, trial2);
      const double fc = f(trial2);
      if (fc < worst) {
        simplex[order[n]] = trial2;
        values[order[n]] = fc;
        continue;
      }
    }
    const auto& xb = simplex[order[0]];
    for (std::size_t i = 1; i <= n; ++i) {
      auto& x = simplex[order[i]];
      for (std::size_t k = 0; k < n; ++k) x[k] = xb[k] + 0.5 * (x[k] - xb[k]);
      values[order[i]] = f(x);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return {simplex[best], values[best], it};
}

OptimizeResult optimize_sequence(const ModeSet& modes, const OptimizeOptions& options) {
  modes.validate();
  if (options.n_segments < 2 || options.n_segments % 2 != 0) {
    throw ConfigError(fmt::format("segment count must be even and >= 2, got {}", options.n_segments));
  }
  if (options.restarts < 1) throw ConfigError("at least one restart is required");
  {
    PhaseSequence probe;
    probe.phases.assign(static_cast<std::size_t>(options.n_segments), 0.0);
    probe.total_duration = options.duration;
    probe.ramp_time = options.ramp;
    probe.validate();
  }

  const std::size_t half = static_cast<std::size_t>(options.n_segments / 2);
  auto objective = [&](std::span<const double> x) {
    return closure_residual(PhaseSequence::from_half(x, options.duration, options.ramp), options.drive, modes);
  };

  std::vector<std::vector<double>> best_x(static_cast<std::size_t>(options.restarts));
  std::vector<double> residuals(static_cast<std::size_t>(options.restarts));

  auto run = [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r));
    std::vector<double> x(half);
    for (auto& v : x) v = pi * (2.0 * rng.uniform() - 1.0);
    auto result = nelder_mead(objective, x, options.simplex);
    for (int polish = 0; polish < 200; ++polish) {
      auto next = nelder_mead(objective, result.x, options.simplex);
      const double gain = result.value - next.value;
      if (next.value < result.value) result = std::move(next);
      if (gain < options.improvement_tol) break;
    }
    best_x[r] = std::move(result.x);
    residuals[r] = result.value;
  };

  unsigned workers =
      options.threads > 0 ? static_cast<unsigned>(options.threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(options.restarts));
  if (workers <= 1) {
    for (std::size_t r = 0; r < best_x.size(); ++r) run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t r = next++; r < best_x.size(); r = next++) {
            try {
              run(r);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < residuals.size(); ++r) {
    if (residuals[r] < residuals[best]) best = r;
  }
  OptimizeResult out;
  out.sequence = PhaseSequence::from_half(best_x[best], options.duration, options.ramp);
  out.residual = residuals[best];
  out.attained = out.residual < options.target;
  out.best_restart = static_cast<int>(best);
  out.restart_residuals = residuals;
  return out;
}

}  // namespace dfsmem
