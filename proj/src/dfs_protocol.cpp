#include "dfsmem/dfs_protocol.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "dfsmem/error.hpp"
#include "dfsmem/rng.hpp"

namespace dfsmem {

namespace {

using std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

Eigen::Vector4cd bell_target() {
  Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
  v(0) = 1.0 / std::sqrt(2.0);
  v(3) = -kI / std::sqrt(2.0);
  return v;
}

Eigen::VectorXcd fix_global_phase(Eigen::VectorXcd v) {
  v.normalize();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      break;
    }
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) < 1e-15) v(i) = 0.0;
  }
  return v;
}

Eigen::Matrix4cd analysis_pulse(double phi) {
  return global(rotation(pi / 2, Eigen::Vector3d(std::cos(phi), std::sin(phi), 0.0)));
}

Eigen::Vector4d populations(const Eigen::Matrix4cd& rho) {
  Eigen::Vector4d p;
  for (int i = 0; i < 4; ++i) p(i) = rho(i, i).real();
  return p;
}

}  // namespace

std::string_view logical_name(LogicalLabel label) {
  switch (label) {
    case LogicalLabel::ZeroL:
      return "0L";
    case LogicalLabel::OneL:
      return "1L";
    case LogicalLabel::PlusL:
      return "+L";
    case LogicalLabel::MinusL:
      return "-L";
    case LogicalLabel::PlusN:
      return "+N";
    case LogicalLabel::PlusF:
      return "+F";
  }
  return "?";
}

LogicalLabel parse_logical(std::string_view text) {
  for (auto label : {LogicalLabel::ZeroL, LogicalLabel::OneL, LogicalLabel::PlusL, LogicalLabel::MinusL,
                     LogicalLabel::PlusN, LogicalLabel::PlusF}) {
    if (logical_name(label) == text) return label;
  }
  throw ConfigError(fmt::format("unknown state '{}' (expected 0L, 1L, +L, -L, +N or +F)", text));
}

Eigen::Matrix2cd rotation(double theta, const Eigen::Vector3d& axis) {
  const double norm = axis.norm();
  if (!(norm > 0.0)) throw ConfigError("rotation axis must be nonzero");
  const Eigen::Vector3d n = axis / norm;
  Eigen::Matrix2cd sigma;
  sigma << n.z(), Complex(n.x(), -n.y()), Complex(n.x(), n.y()), -n.z();
  return std::cos(theta / 2) * Eigen::Matrix2cd::Identity() - kI * std::sin(theta / 2) * sigma;
}

Eigen::Matrix4cd global(const Eigen::Matrix2cd& u) {
  Eigen::Matrix4cd out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) out(2 * a + c, 2 * b + d) = u(a, b) * u(c, d);
  return out;
}

Eigen::Matrix4cd zz_phase(double chi) {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = std::exp(-kI * chi);
  m(1, 1) = std::exp(kI * chi);
  m(2, 2) = std::exp(kI * chi);
  m(3, 3) = std::exp(-kI * chi);
  return m;
}

Eigen::Vector4cd entangler_output(double chi) {
  const Eigen::Vector3d x(1.0, 0.0, 0.0);
  const Eigen::Matrix4cd half = global(rotation(pi / 2, x));
  const Eigen::Matrix4cd full = global(rotation(pi, x));
  const Eigen::Matrix4cd zz = zz_phase(chi);
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  psi(0) = 1.0;
  return half * zz * full * zz * half * psi;
}

EntanglerSolution solve_entangler_phase() {
  const Eigen::Vector4cd target = bell_target();
  auto infidelity = [&](double chi) { return 1.0 - state_fidelity(target, entangler_output(chi)); };
  constexpr int kScan = 2048;
  int best = 0;
  double best_value = 2.0;
  for (int i = 0; i < kScan; ++i) {
    const double v = infidelity(2 * pi * i / kScan);
    if (v < best_value - 1e-12) {
      best_value = v;
      best = i;
    }
  }
  const double step = 2 * pi / kScan;
  std::uintmax_t iters = 200;
  const auto [chi, value] = boost::math::tools::brent_find_minima(infidelity, (best - 1) * step, (best + 1) * step,
                                                                  std::numeric_limits<double>::digits, iters);
  EntanglerSolution s{chi, std::max(value, 0.0)};
  if (s.chi < 0) s.chi += 2 * pi;
  if (s.infidelity > 1e-8) throw NumericalError(fmt::format("entangler phase not found (infidelity {})", s.infidelity));
  return s;
}

QubitState prepare_logical(LogicalLabel label) {
  Eigen::VectorXcd v;
  switch (label) {
    case LogicalLabel::ZeroL:
      v = Eigen::Vector4cd::Unit(1);
      break;
    case LogicalLabel::OneL:
      v = Eigen::Vector4cd::Unit(2);
      break;
    case LogicalLabel::PlusL:
    case LogicalLabel::MinusL: {
      static const double chi = solve_entangler_phase().chi;
      const Eigen::Matrix4cd r = global(rotation(pi / 2, Eigen::Vector3d(1.0, -1.0, 0.0)));
      Eigen::Vector4cd psi = r * entangler_output(chi);
      if (label == LogicalLabel::MinusL) {
        psi(2) = -psi(2);
        psi(3) = -psi(3);
      }
      v = psi;
      break;
    }
    case LogicalLabel::PlusN:
      v = Eigen::Vector4cd(1.0, 0.0, 0.0, 1.0);
      break;
    case LogicalLabel::PlusF:
      v = Eigen::Vector2cd(1.0, 1.0);
      break;
  }
  return {fix_global_phase(v)};
}

double state_fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  if (a.size() != b.size()) throw ConfigError("state dimensions differ");
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

Eigen::Vector4d rotated_basis_populations(const Eigen::Matrix4cd& rho) {
  // The populations are trigonometric polynomials of degree <= 4 in phi, so an
  // equally spaced average with 16 nodes is exact.
  constexpr int kNodes = 16;
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  for (int k = 0; k < kNodes; ++k) {
    const Eigen::Matrix4cd u = analysis_pulse(2 * pi * k / kNodes);
    sum += populations(u * rho * u.adjoint());
  }
  return sum / kNodes;
}

double fidelity_pm(const Eigen::Matrix4cd& rho, const Eigen::Vector4d& rotated_populations, int sign) {
  if (sign != 1 && sign != -1) throw ConfigError("sign must be +1 or -1");
  for (int i = 0; i < 4; ++i) {
    if (!(rotated_populations(i) >= 0.0 && rotated_populations(i) <= 1.0)) {
      throw ConfigError(fmt::format("rotated population {} outside [0, 1]", rotated_populations(i)));
    }
  }
  if (std::abs(rotated_populations.sum() - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("rotated populations sum to {}, not 1", rotated_populations.sum()));
  }
  const double center = 0.5 * (rho(1, 1).real() + rho(2, 2).real());
  return center + sign * (rotated_populations(0) + rotated_populations(3) - 0.5);
}

double parity(const Eigen::Matrix4cd& rho, double phi) {
  const Eigen::Matrix4cd u = analysis_pulse(phi);
  const Eigen::Vector4d p = populations(u * rho * u.adjoint());
  return p(0) - p(1) - p(2) + p(3);
}

double entanglement_fidelity(double p00, double p11, double parity_quarter, double parity_three_quarter) {
  return 0.5 * (p00 + p11) + 0.25 * (parity_quarter - parity_three_quarter);
}

Eigen::MatrixXcd qubit_block(const DensityMatrix& rho) {
  const auto& space = rho.space();
  const std::size_t n = space.n_ions();
  const std::size_t q = std::size_t{1} << n;
  std::vector<std::size_t> index(q);
  for (std::size_t b = 0; b < q; ++b) {
    std::vector<ZeemanLevel> levels(n);
    for (std::size_t ion = 0; ion < n; ++ion) levels[ion] = (b >> (n - 1 - ion)) & 1u ? kOneF : kZeroF;
    index[b] = space.index_of(levels);
  }
  Eigen::MatrixXcd block(q, q);
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t c = 0; c < q; ++c) block(r, c) = rho(index[r], index[c]);
  return block;
}

DensityMatrix embed_in_f_manifold(const QubitState& state) {
  const int n = state.n_qubits();
  const auto space = CompositeSpace::f_manifold(n);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dim()));
  for (Eigen::Index b = 0; b < state.amplitudes.size(); ++b) {
    std::vector<ZeemanLevel> levels(n);
    for (int ion = 0; ion < n; ++ion) levels[ion] = (b >> (n - 1 - ion)) & 1 ? kOneF : kZeroF;
    psi(static_cast<Eigen::Index>(space.index_of(levels))) = state.amplitudes(b);
  }
  return DensityMatrix::pure(space, psi);
}

std::string_view encoding_name(Encoding encoding) { return encoding == Encoding::Clock ? "clock" : "zeeman"; }

Encoding parse_encoding(std::string_view text) {
  if (text == "clock") return Encoding::Clock;
  if (text == "zeeman") return Encoding::Zeeman;
  throw ConfigError(fmt::format("unknown encoding '{}' (expected clock or zeeman)", text));
}

void GradientModel::validate() const {
  if (!std::isfinite(B) || B <= 0.0) throw ConfigError(fmt::format("field B must be positive, got {}", B));
  if (!std::isfinite(deltaB)) throw ConfigError("deltaB must be finite");
  if (!std::isfinite(clock_coeff) || clock_coeff <= 0.0) throw ConfigError("clock_coeff must be positive");
  if (!std::isfinite(zeeman_coeff) || zeeman_coeff <= 0.0) throw ConfigError("zeeman_coeff must be positive");
}

double frequency_difference(const GradientModel& model, Encoding encoding) {
  return encoding == Encoding::Clock ? 2.0 * model.clock_coeff * model.B * model.deltaB
                                     : model.zeeman_coeff * model.deltaB;
}

double calibrate_delta_b(double period, const GradientModel& model, Encoding encoding) {
  if (!std::isfinite(period) || period <= 0.0) {
    throw ConfigError(fmt::format("oscillation period must be positive, got {}", period));
  }
  model.validate();
  const double df = 1.0 / period;
  return encoding == Encoding::Clock ? df / (2.0 * model.clock_coeff * model.B) : df / model.zeeman_coeff;
}

void EchoSchedule::validate() const {
  if (!std::isfinite(total_T) || total_T < 0.0) throw ConfigError("storage time must be >= 0");
  double last = 0.0;
  for (double t : pulse_times) {
    if (!(t > last && t < total_T)) {
      throw ConfigError(fmt::format("echo pulse at {} s must lie strictly inside (0, {}) and after the previous one",
                                    t, total_T));
    }
    last = t;
  }
}

EchoSchedule EchoSchedule::from_fractions(double T, std::span<const double> fractions) {
  EchoSchedule s;
  s.total_T = T;
  for (double f : fractions) s.pulse_times.push_back(f * T);
  if (T > 0.0) s.validate();
  return s;
}

EchoSchedule EchoSchedule::two_pulse(double T) {
  const double fractions[] = {0.25, 0.75};
  return from_fractions(T, fractions);
}

EchoResult echo_phase(double delta_f, const EchoSchedule& schedule) {
  schedule.validate();
  double signed_time = 0.0;
  double last = 0.0;
  double sign = 1.0;
  for (double t : schedule.pulse_times) {
    signed_time += sign * (t - last);
    sign = -sign;
    last = t;
  }
  signed_time += sign * (schedule.total_T - last);
  return {2 * pi * delta_f * signed_time, schedule.pulse_times.size() % 2 == 1};
}

int dephasing_weight(LogicalLabel label) {
  switch (label) {
    case LogicalLabel::PlusF:
      return 1;
    case LogicalLabel::PlusL:
    case LogicalLabel::MinusL:
      return 0;
    case LogicalLabel::PlusN:
      return 2;
    default:
      throw ConfigError(fmt::format("state {} has no coherence to dephase", logical_name(label)));
  }
}

double simulate_quasistatic_dephasing(LogicalLabel label, double sigma_hz, double T, std::int64_t n_shots,
                                      std::uint64_t seed) {
  if (n_shots < 1) throw ConfigError("shot count must be >= 1");
  if (!std::isfinite(sigma_hz) || sigma_hz < 0.0) throw ConfigError("sigma must be >= 0");
  const double w = dephasing_weight(label);
  Complex sum = 0.0;
  for (std::int64_t i = 0; i < n_shots; ++i) {
    const double delta = sigma_hz * counter_normal(seed, static_cast<std::uint64_t>(i));
    sum += std::exp(kI * (w * 2 * pi * delta * T));
  }
  return std::abs(sum) / static_cast<double>(n_shots);
}

DecayDataset quasistatic_dataset(LogicalLabel label, double sigma_hz, std::span<const double> times,
                                 std::int64_t n_shots, std::uint64_t seed) {
  DecayDataset data;
  for (double T : times) {
    const double c = simulate_quasistatic_dephasing(label, sigma_hz, T, n_shots, seed);
    const double f = 0.5 * (1.0 + c);
    data.add(T, n_shots, std::llround(f * static_cast<double>(n_shots)));
  }
  return data;
}

}  // namespace dfsmem
