#include "dfsmem/storage.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <ostream>

#include "dfsmem/error.hpp"
#include "dfsmem/rng.hpp"

namespace dfsmem {

namespace {

int ion_count(LogicalLabel label) { return label == LogicalLabel::PlusF ? 1 : 2; }

// Ideal global pi pulse as a level permutation: |0_F> <-> |1_F> on every ion.
std::vector<std::size_t> echo_permutation(const CompositeSpace& space) {
  std::vector<std::size_t> perm(space.dim());
  for (std::size_t i = 0; i < space.dim(); ++i) {
    auto digits = space.digits(i);
    for (std::size_t ion = 0; ion < space.n_ions(); ++ion) {
      const auto& level = space.ion(ion)[digits[ion]];
      if (level == kZeroF) {
        digits[ion] = space.ion(ion).index_of(kOneF);
      } else if (level == kOneF) {
        digits[ion] = space.ion(ion).index_of(kZeroF);
      }
    }
    perm[i] = space.index(digits);
  }
  return perm;
}

Eigen::MatrixXcd permute(const Eigen::MatrixXcd& m, const std::vector<std::size_t>& perm) {
  Eigen::MatrixXcd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(perm[r], perm[c]) = m(r, c);
  return out;
}

Eigen::VectorXcd permute(const Eigen::VectorXcd& v, const std::vector<std::size_t>& perm) {
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index r = 0; r < v.size(); ++r) out(perm[r]) = v(r);
  return out;
}

struct Frame {
  Eigen::VectorXcd target;            // in the full F-manifold space
  std::vector<ZeemanLevel> reference;  // level per ion that counts as success
  bool basis = true;
};

Frame storage_frame(const StorageScenario& scenario, std::size_t n_pulses) {
  const int n = ion_count(scenario.state);
  const auto space = CompositeSpace::f_manifold(n);
  const auto embedded = embed_in_f_manifold(prepare_logical(scenario.state));
  Eigen::VectorXcd target = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dim()));
  // Recover the pure target vector from its projector.
  const auto& m = embedded.matrix();
  Eigen::Index pivot = 0;
  m.diagonal().real().maxCoeff(&pivot);
  target = m.col(pivot) / std::sqrt(m(pivot, pivot).real());
  if (n_pulses % 2 == 1) target = permute(target, echo_permutation(space));

  Frame frame;
  frame.target = target;
  frame.basis = scenario.state == LogicalLabel::ZeroL || scenario.state == LogicalLabel::OneL;
  if (frame.basis) {
    Eigen::Index idx = 0;
    target.cwiseAbs2().maxCoeff(&idx);
    for (auto d : space.digits(static_cast<std::size_t>(idx))) frame.reference.push_back(space.ion(0)[d]);
  } else if (n == 2) {
    frame.reference = {kZeroF, kOneF};
  } else {
    frame.reference = {kZeroF};
  }
  return frame;
}

// Householder reflection restricted to span(target, reference).
Eigen::MatrixXcd frame_unitary(const Eigen::VectorXcd& target, const Eigen::VectorXcd& reference) {
  const auto dim = target.size();
  const Complex overlap = reference.dot(target);
  const Complex phase = std::abs(overlap) > 1e-15 ? std::conj(overlap) / std::abs(overlap) : Complex(1.0);
  const Eigen::VectorXcd v = phase * target - reference;
  if (v.norm() < 1e-14) return Eigen::MatrixXcd::Identity(dim, dim);
  return Eigen::MatrixXcd::Identity(dim, dim) - 2.0 * v * v.adjoint() / v.squaredNorm();
}

}  // namespace

void StorageScenario::validate() const {
  noise.validate();
  gradient.validate();
  if (times.empty()) throw ConfigError("storage scenario needs at least one time");
  for (double T : times) {
    if (!std::isfinite(T) || T < 0.0) throw ConfigError(fmt::format("storage time must be >= 0, got {}", T));
  }
  double last = 0.0;
  for (double f : echo_fractions) {
    if (!(f > last && f < 1.0)) throw ConfigError("echo fractions must be strictly increasing inside (0, 1)");
    last = f;
  }
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
}

double StoragePoint::raw_fidelity() const {
  return static_cast<double>(successes) / static_cast<double>(repetitions);
}

double StoragePoint::discarded_fidelity() const {
  const auto kept = repetitions - leak_count;
  if (kept <= 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(leak_discarded_successes) / static_cast<double>(kept);
}

StorageState evolve_storage(const StorageScenario& scenario, double T) {
  scenario.validate();
  const int n = ion_count(scenario.state);
  const auto ops = build_jump_operators(scenario.noise, n);
  EvolveOptions options;
  if (n == 2) {
    const double df = frequency_difference(scenario.gradient, scenario.encoding);
    if (df != 0.0) options.shifts.push_back({2, kOneF, 2 * std::numbers::pi * df});
  }

  DensityMatrix rho = embed_in_f_manifold(prepare_logical(scenario.state));
  const auto perm = echo_permutation(rho.space());
  std::size_t pulses = 0;
  if (T > 0.0) {
    const auto schedule = EchoSchedule::from_fractions(T, scenario.echo_fractions);
    double last = 0.0;
    for (double t : schedule.pulse_times) {
      rho = evolve(rho, ops, t - last, options);
      rho = DensityMatrix(rho.space(), permute(rho.matrix(), perm));
      last = t;
      ++pulses;
    }
    rho = evolve(rho, ops, T - last, options);
  }

  const Frame frame = storage_frame(scenario, pulses);
  const double fidelity = frame.target.dot(rho.matrix() * frame.target).real();
  const double survival = survival_probability(rho);
  return {std::move(rho), fidelity, survival};
}

std::vector<StoragePoint> simulate_storage(const StorageScenario& scenario) {
  scenario.validate();
  std::vector<StoragePoint> points;
  for (std::size_t i = 0; i < scenario.times.size(); ++i) {
    const double T = scenario.times[i];
    const auto state = evolve_storage(scenario, T);
    const auto& space = state.rho.space();
    const std::size_t pulses = T > 0.0 ? scenario.echo_fractions.size() : 0;
    const Frame frame = storage_frame(scenario, pulses);

    Eigen::MatrixXcd rho = state.rho.matrix();
    if (!frame.basis) {
      Eigen::VectorXcd ref = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dim()));
      ref(static_cast<Eigen::Index>(space.index_of(frame.reference))) = 1.0;
      const Eigen::MatrixXcd u = frame_unitary(frame.target, ref);
      rho = u * rho * u.adjoint();
    }
    std::vector<double> cdf(space.dim());
    double acc = 0.0;
    for (std::size_t k = 0; k < space.dim(); ++k) {
      acc += std::max(rho(k, k).real(), 0.0);
      cdf[k] = acc;
    }

    std::vector<DetectionOutcome> wanted;
    for (const auto& level : frame.reference) {
      wanted.push_back(level == kZeroF ? DetectionOutcome::ZeroF : DetectionOutcome::OneF);
    }

    Rng rng(derive_seed(scenario.seed, i));
    StoragePoint p;
    p.T = T;
    p.repetitions = scenario.repetitions;
    for (std::int64_t shot = 0; shot < scenario.repetitions; ++shot) {
      const double u = rng.uniform() * acc;
      const auto config = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const auto digits = space.digits(std::min(config, space.dim() - 1));
      bool success = true;
      bool leak = false;
      for (std::size_t ion = 0; ion < space.n_ions(); ++ion) {
        const auto outcome = DetectionSampler::draw(scenario.confusion.resolve(space.ion(ion)[digits[ion]]),
                                                    rng.uniform());
        success = success && outcome == wanted[ion];
        leak = leak || outcome == DetectionOutcome::ZeemanLeak;
      }
      if (success) ++p.successes;
      if (leak) {
        ++p.leak_count;
      } else if (success) {
        ++p.leak_discarded_successes;
      }
    }
    points.push_back(p);
  }
  return points;
}

void write_storage_csv(std::ostream& out, const std::vector<StoragePoint>& points) {
  out << "T_seconds,repetitions,successes,leak_discarded_successes,leak_count\n";
  for (const auto& p : points) {
    out << fmt::format("{},{},{},{},{}\n", p.T, p.repetitions, p.successes, p.leak_discarded_successes, p.leak_count);
  }
}

}  // namespace dfsmem
