#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fmt/format.h>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "dfsmem/detection.hpp"
#include "dfsmem/dfs_protocol.hpp"
#include "dfsmem/fitting.hpp"
#include "dfsmem/gate_opt.hpp"
#include "dfsmem/master_eq.hpp"
#include "dfsmem/rng.hpp"
#include "dfsmem/storage.hpp"

using namespace dfsmem;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.pass) ++failures;
  fmt::print("criterion {:2d} {} {}: {} [{:.2f} s]\n", id, out.pass ? "PASS" : "FAIL", name, out.detail, secs);
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome leakage_anchor() {
  const auto t0 = std::chrono::steady_clock::now();
  const double gamma = fit_gamma_to_leakage(0.12, 800.0);
  const double leak = single_ion_leakage(gamma, 800.0);
  const double secs = elapsed_since(t0);
  const bool ok = std::abs(leak - 0.12) <= 1e-6 && secs < 5.0;
  return {ok, fmt::format("gamma = {:.6e} /s, leakage(800 s) = {:.9f}, fit time {:.3f} s", gamma, leak, secs)};
}

Outcome raw_decay() {
  const auto t0 = std::chrono::steady_clock::now();
  StorageScenario s;
  s.state = LogicalLabel::PlusL;
  s.noise.gamma_leak = fit_gamma_to_leakage(0.12, 800.0);
  s.times = {1.0};
  auto f = [&](double T) { return evolve_storage(s, T).survival - std::exp(-1.0); };
  std::uintmax_t iters = 100;
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 100.0, 2e4, boost::math::tools::eps_tolerance<double>(40),
                                                          iters);
  const double t_e = 0.5 * (lo + hi);
  const double secs = elapsed_since(t0);
  const bool ok = t_e >= 1000.0 && t_e <= 4000.0 && secs < 120.0;
  return {ok, fmt::format("two-ion leakage-free survival 1/e time = {:.1f} s (band [1000, 4000])", t_e)};
}

Outcome dfs_immunity() {
  const auto rho0 = embed_in_f_manifold(prepare_logical(LogicalLabel::PlusL));
  const ZeemanLevel a[] = {kZeroF, kOneF};
  const ZeemanLevel b[] = {kOneF, kZeroF};
  const double gd = 1e-3;
  const auto collective = evolve(rho0, build_jump_operators(NoiseParams{0.0, gd, DephasingMode::Collective}, 2), 1e4);
  const double drift = std::abs(collective.element(a, b) - rho0.element(a, b));
  const double T = 500.0;
  const auto independent = evolve(rho0, build_jump_operators(NoiseParams{0.0, gd}, 2), T);
  const Complex expected = rho0.element(a, b) * std::exp(-4.0 * gd * T);
  const double rel = std::abs(independent.element(a, b) - expected) / std::abs(expected);
  return {drift < 1e-9 && rel < 1e-6,
          fmt::format("collective |drho_01,10| over 1e4 s = {:.2e}; independent rel. error vs exp(-4 gd T) = {:.2e}",
                      drift, rel)};
}

Outcome non_dfs_penalty() {
  const double sigma = 1e-3;
  const double tau_f = std::sqrt(2.0) / (2 * pi * sigma);
  std::vector<double> times;
  for (int i = 0; i <= 15; ++i) times.push_back(1.5 * tau_f * i / 15.0);
  const std::int64_t shots = 100000;
  const auto df = quasistatic_dataset(LogicalLabel::PlusF, sigma, times, shots, 2024);
  const auto dn = quasistatic_dataset(LogicalLabel::PlusN, sigma, times, shots, 2024);
  const auto ff = fit_mle(DecayFamily::Gaussian, df);
  const auto fn = fit_mle(DecayFamily::Gaussian, dn);
  const double ratio = fn.tau_hat / ff.tau_hat;
  const bool ok = std::abs(ratio - 0.5) <= 0.03 * 0.5 && !ff.unidentifiable && !fn.unidentifiable;
  return {ok, fmt::format("tau(+F) = {:.2f} s, tau(+N) = {:.2f} s, ratio = {:.4f}", ff.tau_hat, fn.tau_hat, ratio)};
}

Outcome detection_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    const char* pattern;
    DetectionOutcome expected;
  };
  const Case table[] = {{"BDDD", DetectionOutcome::LeakToSOrHop}, {"DBDD", DetectionOutcome::ZeroF},
                        {"DDBD", DetectionOutcome::OneF},         {"DDDB", DetectionOutcome::ZeemanLeak},
                        {"DDDD", DetectionOutcome::ZeemanLeak},   {"DBBD", DetectionOutcome::Discard}};
  bool ok = true;
  for (const auto& c : table) ok = ok && interpret(DetectionPattern::parse(c.pattern)) == c.expected;
  const auto cm = default_confusion();
  double worst = 0.0;
  std::uint64_t seed = 5;
  for (const auto& [level, row] : cm.rows()) {
    DetectionSampler sampler(cm, seed++);
    OutcomeCounts counts;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) counts.add(sampler.sample(level));
    const double p[] = {row.p_zero, row.p_one, row.p_zeeman};
    const double k[] = {static_cast<double>(counts.zero_f), static_cast<double>(counts.one_f),
                        static_cast<double>(counts.zeeman_leak)};
    for (int j = 0; j < 3; ++j) {
      const double sd = std::sqrt(n * p[j] * (1 - p[j]));
      const double z = sd > 0 ? std::abs(k[j] - n * p[j]) / sd : (k[j] == n * p[j] ? 0.0 : INFINITY);
      worst = std::max(worst, z);
    }
  }
  const double secs = elapsed_since(t0);
  ok = ok && worst <= 3.0 && secs < 10.0;
  const auto& one = cm.row(kOneF);
  return {ok, fmt::format("pattern table ok, |1_F> row ({:.3f}, {:.3f}, {:.3f}), worst marginal deviation {:.2f} sigma",
                          one.p_zero, one.p_one, one.p_zeeman, worst)};
}

Outcome mle_recovery() {
  DecayDataset clean;
  for (double T : {0.0, 50.0, 100.0, 200.0}) {
    clean.add(T, 1000000, std::llround(decay_fidelity(DecayFamily::Exponential, 1.0, 100.0, T) * 1e6));
  }
  const auto fit = fit_mle(DecayFamily::Exponential, clean);
  const double tau_err = std::abs(fit.tau_hat - 100.0) / 100.0;

  constexpr int trials = 200;
  constexpr int n_boot = 200;
  int covered = 0;
  int usable = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(777, static_cast<std::uint64_t>(t)));
    DecayDataset d;
    for (int i = 0; i < 10; ++i) {
      const double T = 1000.0 * i;
      d.add(T, 100, rng.binomial(100, decay_fidelity(DecayFamily::Exponential, 0.96, 8000.0, T)));
    }
    const auto f = fit_mle(DecayFamily::Exponential, d);
    const auto samples = bootstrap(f, d, n_boot, derive_seed(888, static_cast<std::uint64_t>(t)));
    const auto [lo, hi] = tau_interval(samples);
    ++usable;
    if (lo <= 8000.0 && 8000.0 <= hi) ++covered;
  }
  const double coverage = static_cast<double>(covered) / usable;
  const bool ok = tau_err < 5e-3 && coverage >= 0.60 && coverage <= 0.76;
  return {ok, fmt::format("noiseless tau = {:.4f} s (err {:.2e}); 68% interval coverage {}/{} = {:.1f}%", fit.tau_hat,
                          tau_err, covered, usable, 100.0 * coverage)};
}

Outcome gradient_chain() {
  GradientModel m;
  const double dB = calibrate_delta_b(2.64, m, Encoding::Zeeman);
  m.deltaB = dB;
  const double df = frequency_difference(m, Encoding::Clock);
  const bool ok = std::abs(dB - 2.70e-7) <= 0.01 * 2.70e-7 && std::abs(df - 1.0e-3) <= 0.05 * 1.0e-3;
  return {ok, fmt::format("deltaB = {:.4e} G, clock df = {:.4e} Hz", dB, df)};
}

Outcome echo_cancellation() {
  const double df = 1.0e-3;
  double worst = 0.0;
  bool frame = true;
  for (double T : {10.0, 800.0, 5000.0}) {
    for (double t1 : {0.1 * T, 0.25 * T, 0.49 * T}) {
      const auto r = echo_phase(df, EchoSchedule{{t1, t1 + T / 2}, T});
      worst = std::max(worst, std::abs(r.net_phase));
      frame = frame && !r.logical_flip;
    }
  }
  StorageScenario s;
  s.state = LogicalLabel::PlusL;
  s.gradient.deltaB = 2.70e-7;
  s.times = {1.0};
  const double fidelity = evolve_storage(s, 2000.0).fidelity;
  const bool ok = worst < 1e-12 && frame && std::abs(fidelity - 1.0) < 1e-9;
  return {ok, fmt::format("max |net phase| = {:.2e} rad, logical frame restored, +L fidelity after 2000 s = {:.12f}",
                          worst, fidelity)};
}

Outcome gate_closure() {
  const auto modes = ModeSet::three_ion_transverse();
  const auto t0 = std::chrono::steady_clock::now();
  OptimizeOptions o;
  o.seed = 1;
  const auto opt = optimize_sequence(modes, o);
  const double secs = elapsed_since(t0);

  std::vector<double> half{0.417, 0.398, 0.415, 0.363, 0.331, 0.271};
  for (auto& x : half) x *= pi;
  const auto reference_list = PhaseSequence::from_half(half, 150e-6, 2e-6);
  const auto flat = PhaseSequence::from_half(std::vector<double>(6, 0.0), 150e-6, 2e-6);
  const double r_pub = closure_residual(reference_list, o.drive, modes);
  const double r_flat = closure_residual(flat, o.drive, modes);

  double reality = 0.0;
  for (const auto* seq : {&opt.sequence, &reference_list}) {
    for (double delta : modes.detunings()) {
      const auto a = std::exp(std::complex<double>(0, -delta * seq->total_duration / 2)) *
                     displacement(*seq, o.drive, delta);
      reality = std::max(reality, std::abs(a.imag()) / (o.drive.base_amplitude * seq->total_duration));
    }
  }
  const bool opt_ok = opt.residual < 1e-6 && secs < 60.0;
  const bool pub_ok = r_pub * 10.0 <= r_flat;
  const bool real_ok = reality <= 1e-10;
  return {opt_ok && pub_ok && real_ok,
          fmt::format("optimized residual {:.2e} in {:.2f} s [{}]; reference list {:.3e} vs flat {:.3e} = {:.2f}x below "
                      "[{}]; max |Im e^(-i delta T/2) alpha|/(Omega T) = {:.1e} [{}]",
                      opt.residual, secs, opt_ok ? "ok" : "no", r_pub, r_flat, r_flat / r_pub,
                      pub_ok ? "ok" : "no", reality, real_ok ? "ok" : "no")};
}

Outcome preparation() {
  const auto sol = solve_entangler_phase();
  Eigen::Vector4cd bell = Eigen::Vector4cd::Zero();
  bell(0) = 1.0 / std::sqrt(2.0);
  bell(3) = Complex(0, -1) / std::sqrt(2.0);
  const Eigen::Vector4cd ent = entangler_output(sol.chi);
  const double inf_bell = std::max(0.0, 1.0 - state_fidelity(bell, ent));
  const Eigen::Vector4cd rotated = global(rotation(pi / 2, Eigen::Vector3d(1, -1, 0))) * ent;
  Eigen::Vector4cd plus = Eigen::Vector4cd::Zero();
  plus(1) = plus(2) = 1.0 / std::sqrt(2.0);
  const double inf_plus = std::max(0.0, 1.0 - state_fidelity(plus, rotated));
  return {inf_bell < 1e-10 && inf_plus < 1e-10,
          fmt::format("chi = {:.10f}, entangler infidelity {:.1e}, rotated +L infidelity {:.1e}", sol.chi, inf_bell,
                      inf_plus)};
}

}  // namespace

int main() {
  run(1, "leakage anchor", leakage_anchor);
  run(2, "raw-decay consistency", raw_decay);
  run(3, "DFS immunity", dfs_immunity);
  run(4, "non-DFS penalty", non_dfs_penalty);
  run(5, "detection interpreter", detection_checks);
  run(6, "MLE recovery and coverage", mle_recovery);
  run(7, "gradient calibration chain", gradient_chain);
  run(8, "echo cancellation", echo_cancellation);
  run(9, "gate closure", gate_closure);
  run(10, "preparation algebra", preparation);
  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
