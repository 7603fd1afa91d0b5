#include "dfsmem/master_eq.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dfsmem/error.hpp"

namespace dfsmem {

namespace {

bool is_qubit_level(const ZeemanLevel& level) { return level == kZeroF || level == kOneF; }

double qubit_z(const ZeemanLevel& level) {
  if (level == kZeroF) return 1.0;
  if (level == kOneF) return -1.0;
  return 0.0;
}

double parse_double(std::string_view token) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ConfigError(fmt::format("malformed number '{}' in density matrix record", token));
  }
  return value;
}

}  // namespace

DensityMatrix::DensityMatrix(CompositeSpace space, Eigen::MatrixXcd matrix)
    : space_(std::move(space)), rho_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(space_.dim());
  if (rho_.rows() != n || rho_.cols() != n) {
    throw ConfigError(fmt::format("density matrix is {}x{} but the level space has dimension {}", rho_.rows(),
                                  rho_.cols(), n));
  }
  if (!rho_.allFinite()) throw NumericalError("density matrix has non-finite entries");
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw ConfigError(fmt::format("density matrix is not Hermitian (max deviation {:.3g})", herm));
  }
  const double tr = rho_.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw ConfigError(fmt::format("density matrix trace is {:.17g}", tr));
  }
  const double lowest = min_eigenvalue();
  if (lowest < kEigenTol) {
    throw ConfigError(fmt::format("density matrix has negative eigenvalue {:.3g}", lowest));
  }
}

DensityMatrix DensityMatrix::pure(CompositeSpace space, const Eigen::VectorXcd& psi) {
  const double norm = psi.norm();
  if (norm == 0.0) throw ConfigError("cannot build a density matrix from a zero vector");
  const Eigen::VectorXcd v = psi / norm;
  Eigen::MatrixXcd m = v * v.adjoint();
  // Exact Hermiticity regardless of rounding in the outer product.
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(std::move(space), std::move(m));
}

DensityMatrix DensityMatrix::basis(CompositeSpace space, std::span<const ZeemanLevel> levels) {
  const auto idx = static_cast<Eigen::Index>(space.index_of(levels));
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(space.dim(), space.dim());
  m(idx, idx) = 1.0;
  return DensityMatrix(std::move(space), std::move(m));
}

Complex DensityMatrix::element(std::span<const ZeemanLevel> row, std::span<const ZeemanLevel> col) const {
  return rho_(static_cast<Eigen::Index>(space_.index_of(row)), static_cast<Eigen::Index>(space_.index_of(col)));
}

double DensityMatrix::population(std::span<const ZeemanLevel> levels) const {
  const auto idx = static_cast<Eigen::Index>(space_.index_of(levels));
  return rho_(idx, idx).real();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DensityMatrix::write(std::ostream& out) const {
  out << "# dfsmem density matrix\n";
  out << "dim " << space_.dim() << "\n";
  out << "ions " << space_.n_ions() << "\n";
  for (std::size_t i = 0; i < space_.n_ions(); ++i) {
    out << "levels " << space_.ion(i).size();
    for (const auto& level : space_.ion(i)) out << ' ' << level.label();
    out << "\n";
  }
  out << "data\n";
  for (Eigen::Index r = 0; r < rho_.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho_.cols(); ++c) {
      out << fmt::format("{} {}\n", rho_(r, c).real(), rho_(r, c).imag());
    }
  }
}

DensityMatrix DensityMatrix::read(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      if (!line.empty() && line.front() != '#') return line;
    }
    throw ConfigError("truncated density matrix record");
  };

  std::size_t dim = 0;
  std::size_t n_ions = 0;
  {
    std::istringstream ss(next_line());
    std::string key;
    if (!(ss >> key >> dim) || key != "dim") throw ConfigError("density matrix record: expected 'dim <n>'");
  }
  {
    std::istringstream ss(next_line());
    std::string key;
    if (!(ss >> key >> n_ions) || key != "ions") throw ConfigError("density matrix record: expected 'ions <n>'");
  }
  std::vector<LevelSpace> ions;
  for (std::size_t i = 0; i < n_ions; ++i) {
    std::istringstream ss(next_line());
    std::string key;
    std::size_t count = 0;
    if (!(ss >> key >> count) || key != "levels") {
      throw ConfigError("density matrix record: expected 'levels <n> <labels...>'");
    }
    std::vector<ZeemanLevel> levels;
    std::string label;
    while (ss >> label) levels.push_back(ZeemanLevel::parse(label));
    if (levels.size() != count) throw ConfigError("density matrix record: level count mismatch");
    ions.emplace_back(std::move(levels));
  }
  CompositeSpace space(std::move(ions));
  if (space.dim() != dim) throw ConfigError("density matrix record: dimension does not match level spaces");
  if (next_line() != "data") throw ConfigError("density matrix record: expected 'data'");

  Eigen::MatrixXcd m(dim, dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const std::string entry = next_line();
      const auto space_pos = entry.find(' ');
      if (space_pos == std::string::npos) throw ConfigError("density matrix record: malformed entry");
      m(r, c) = Complex(parse_double(std::string_view(entry).substr(0, space_pos)),
                        parse_double(std::string_view(entry).substr(space_pos + 1)));
    }
  }
  return DensityMatrix(std::move(space), std::move(m));
}

void NoiseParams::validate() const {
  if (!std::isfinite(gamma_leak) || gamma_leak < 0.0) {
    throw ConfigError(fmt::format("gamma_leak must be a nonnegative rate, got {}", gamma_leak));
  }
  if (!std::isfinite(gamma_dephase) || gamma_dephase < 0.0) {
    throw ConfigError(fmt::format("gamma_dephase must be a nonnegative rate, got {}", gamma_dephase));
  }
}

std::vector<JumpOperator> build_jump_operators(const NoiseParams& params, int n_ions) {
  if (n_ions != 1 && n_ions != 2) {
    throw ConfigError(fmt::format("n_ions must be 1 or 2, got {}", n_ions));
  }
  params.validate();

  std::vector<JumpOperator> ops;
  const double leak_amp = std::sqrt(params.gamma_leak);
  const auto channels = leak_channels(params.cross_manifold_leak);
  for (int ion = 1; ion <= n_ions; ++ion) {
    for (const auto& ch : channels) {
      const bool up = ch.target.mF > ch.source.mF || (ch.target.mF == ch.source.mF && ch.target.F > ch.source.F);
      ops.push_back({ion, up ? JumpKind::LeakUp : JumpKind::LeakDown, ch.source, ch.target, leak_amp});
    }
  }

  const double deph_amp = std::sqrt(params.gamma_dephase);
  if (params.dephasing_mode == DephasingMode::Independent) {
    for (int ion = 1; ion <= n_ions; ++ion) ops.push_back({ion, JumpKind::Dephase, kZeroF, kOneF, deph_amp});
  } else {
    ops.push_back({JumpOperator::kAllIons, JumpKind::Dephase, kZeroF, kOneF, deph_amp});
  }
  return ops;
}

Liouvillian::Liouvillian(const CompositeSpace& space, std::span<const JumpOperator> ops,
                         std::span<const LevelShift> shifts)
    : dim_(space.dim()) {
  const std::size_t n_ions = space.n_ions();

  auto check_ion = [&](int ion) {
    if (ion < 1 || static_cast<std::size_t>(ion) > n_ions) {
      throw ConfigError(fmt::format("operator targets ion {} in a {}-ion space", ion, n_ions));
    }
    return static_cast<std::size_t>(ion - 1);
  };

  std::vector<std::vector<double>> outflow(n_ions);
  std::vector<std::vector<double>> energy(n_ions);
  std::vector<std::vector<double>> z(n_ions);
  for (std::size_t i = 0; i < n_ions; ++i) {
    outflow[i].assign(space.ion(i).size(), 0.0);
    energy[i].assign(space.ion(i).size(), 0.0);
    z[i].resize(space.ion(i).size());
    for (std::size_t k = 0; k < space.ion(i).size(); ++k) z[i][k] = qubit_z(space.ion(i)[k]);
  }
  std::vector<double> independent_rate(n_ions, 0.0);
  double collective_rate = 0.0;

  for (const auto& op : ops) {
    const double rate = op.amplitude * op.amplitude;
    if (op.kind == JumpKind::Dephase) {
      if (op.ion == JumpOperator::kAllIons) {
        collective_rate += rate;
      } else {
        independent_rate[check_ion(op.ion)] += rate;
      }
      continue;
    }
    const std::size_t ion = check_ion(op.ion);
    if (rate == 0.0) continue;
    const std::size_t s = space.ion(ion).index_of(op.source);
    const std::size_t t = space.ion(ion).index_of(op.target);
    moves_.push_back({ion, s * space.stride(ion), t * space.stride(ion), rate});
    outflow[ion][s] += rate;
  }
  for (const auto& shift : shifts) {
    const std::size_t ion = check_ion(shift.ion);
    energy[ion][space.ion(ion).index_of(shift.level)] += shift.angular_frequency;
  }

  // Per composite index: total outflow, energy and collective z.
  std::vector<double> out_total(dim_, 0.0);
  std::vector<double> e_total(dim_, 0.0);
  std::vector<double> z_total(dim_, 0.0);
  std::vector<std::vector<double>> z_ion(n_ions, std::vector<double>(dim_, 0.0));
  for (std::size_t a = 0; a < dim_; ++a) {
    for (std::size_t i = 0; i < n_ions; ++i) {
      const std::size_t d = space.digit(a, i);
      out_total[a] += outflow[i][d];
      e_total[a] += energy[i][d];
      z_total[a] += z[i][d];
      z_ion[i][a] = z[i][d];
    }
  }

  // For real diagonal L = diag(l): D[L] rho_ab = -(l_a - l_b)^2 / 2 rho_ab.
  diagonal_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  double max_diag = 0.0;
  for (std::size_t b = 0; b < dim_; ++b) {
    for (std::size_t a = 0; a < dim_; ++a) {
      double re = -0.5 * (out_total[a] + out_total[b]);
      for (std::size_t i = 0; i < n_ions; ++i) {
        const double dz = z_ion[i][a] - z_ion[i][b];
        re -= 0.5 * independent_rate[i] * dz * dz;
      }
      const double dzc = z_total[a] - z_total[b];
      re -= 0.5 * collective_rate * dzc * dzc;
      const Complex c(re, -(e_total[a] - e_total[b]));
      diagonal_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c;
      max_diag = std::max(max_diag, std::abs(c));
    }
  }

  complement_.resize(n_ions);
  for (std::size_t i = 0; i < n_ions; ++i) {
    for (std::size_t a = 0; a < dim_; ++a) {
      if (space.digit(a, i) == 0) complement_[i].push_back(a);
    }
  }

  double move_total = 0.0;
  for (const auto& mv : moves_) move_total += mv.rate;
  norm_bound_ = max_diag + move_total;
}

void Liouvillian::apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
  out = diagonal_.cwiseProduct(rho);
  for (const auto& mv : moves_) {
    const auto& rest = complement_[mv.ion];
    for (const std::size_t rb : rest) {
      const auto src_col = static_cast<Eigen::Index>(rb + mv.source);
      const auto dst_col = static_cast<Eigen::Index>(rb + mv.target);
      for (const std::size_t ra : rest) {
        out(static_cast<Eigen::Index>(ra + mv.target), dst_col) +=
            mv.rate * rho(static_cast<Eigen::Index>(ra + mv.source), src_col);
      }
    }
  }
}

Eigen::MatrixXcd Liouvillian::exp_action(const Eigen::MatrixXcd& rho, double t) const {
  if (t == 0.0 || norm_bound_ == 0.0) return rho;
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(norm_bound_ * t)));
  const double h = t / static_cast<double>(steps);

  Eigen::MatrixXcd state = rho;
  Eigen::MatrixXcd term(rho.rows(), rho.cols());
  Eigen::MatrixXcd next(rho.rows(), rho.cols());
  for (long s = 0; s < steps; ++s) {
    term = state;
    Eigen::MatrixXcd sum = state;
    // ||L h|| <= 1, so the k-th term is bounded by 1/k!.
    for (int k = 1; k <= 40; ++k) {
      apply(term, next);
      term = next * (h / k);
      sum += term;
      const double size = term.cwiseAbs().maxCoeff();
      if (size <= 1e-18 * std::max(1.0, sum.cwiseAbs().maxCoeff())) break;
    }
    state = std::move(sum);
    if (!state.allFinite()) {
      throw NumericalError(fmt::format("exponential integrator diverged at t = {:.6g} s", (s + 1) * h));
    }
  }
  return state;
}

Eigen::MatrixXcd Liouvillian::rk4(const Eigen::MatrixXcd& rho, double t, double max_step) const {
  if (t == 0.0) return rho;
  double h_cap = max_step > 0.0 ? max_step : t;
  if (norm_bound_ > 0.0) h_cap = std::min(h_cap, 0.1 / norm_bound_);
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(t / h_cap)));
  const double h = t / static_cast<double>(steps);

  Eigen::MatrixXcd y = rho;
  Eigen::MatrixXcd k1, k2, k3, k4;
  for (long s = 0; s < steps; ++s) {
    apply(y, k1);
    apply(y + 0.5 * h * k1, k2);
    apply(y + 0.5 * h * k2, k3);
    apply(y + h * k3, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) {
      throw NumericalError(fmt::format("RK4 integration failed at t = {:.6g} s", (s + 1) * h));
    }
  }
  return y;
}

Eigen::MatrixXcd Liouvillian::dense() const {
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXcd super(n * n, n * n);
  Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd out;
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      unit(r, c) = 1.0;
      apply(unit, out);
      super.col(c * n + r) = Eigen::Map<const Eigen::VectorXcd>(out.data(), n * n);
      unit(r, c) = 0.0;
    }
  }
  return super;
}

DensityMatrix evolve(const DensityMatrix& rho0, std::span<const JumpOperator> ops, double T,
                     const EvolveOptions& options) {
  if (!std::isfinite(T) || T < 0.0) throw ConfigError(fmt::format("storage time must be >= 0, got {}", T));
  if (T == 0.0) return rho0;
  const Liouvillian generator(rho0.space(), ops, options.shifts);
  Eigen::MatrixXcd out = options.method == Integrator::Exponential
                             ? generator.exp_action(rho0.matrix(), T)
                             : generator.rk4(rho0.matrix(), T, options.rk4_max_step);
  out = 0.5 * (out + out.adjoint()).eval();
  try {
    return DensityMatrix(rho0.space(), std::move(out));
  } catch (const ConfigError& e) {
    throw NumericalError(fmt::format("evolution to T = {} s left the state space: {}", T, e.what()));
  }
}

double survival_probability(const DensityMatrix& rho) {
  const auto& space = rho.space();
  double total = 0.0;
  for (std::size_t a = 0; a < space.dim(); ++a) {
    bool all_qubit = true;
    for (std::size_t i = 0; i < space.n_ions() && all_qubit; ++i) {
      all_qubit = is_qubit_level(space.ion(i)[space.digit(a, i)]);
    }
    if (all_qubit) total += rho(a, a).real();
  }
  return total;
}

double leakage_probability(const DensityMatrix& rho) {
  return std::clamp(1.0 - survival_probability(rho), 0.0, 1.0);
}

double single_ion_leakage(double gamma, double T) {
  NoiseParams params;
  params.gamma_leak = gamma;
  const auto ops = build_jump_operators(params, 1);
  const ZeemanLevel start[] = {kZeroF};
  const auto rho0 = DensityMatrix::basis(CompositeSpace::f_manifold(1), start);
  return leakage_probability(evolve(rho0, ops, T));
}

double fit_gamma_to_leakage(double target_leak, double T) {
  if (!(target_leak > 0.0 && target_leak < 1.0)) {
    throw ConfigError(fmt::format("target leakage must lie in (0, 1), got {}", target_leak));
  }
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError(fmt::format("storage time must be > 0, got {}", T));

  auto residual = [&](double gamma) { return single_ion_leakage(gamma, T) - target_leak; };

  // Leakage from the chain center is increasing in gamma T and saturates at
  // 6/7, so doubling from the short-time estimate brackets any reachable target.
  double hi = target_leak / (2.0 * T);
  double f_hi = residual(hi);
  double lo = 0.0;
  double f_lo = -target_leak;
  while (f_hi < 0.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    if (hi * T > 1e3) {
      throw NumericalError(
          fmt::format("leakage {} is not reachable at T = {} s (bracket failed at gamma = {:.3g}/s)", target_leak, T,
                      hi));
    }
    f_hi = residual(hi);
  }
  if (f_hi == 0.0) return hi;

  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi,
                                                        boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (a + b);
}

}  // namespace dfsmem
