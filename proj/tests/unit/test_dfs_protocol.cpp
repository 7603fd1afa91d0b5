#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dfsmem/dfs_protocol.hpp"
#include "dfsmem/error.hpp"

using namespace dfsmem;
using std::numbers::pi;

namespace {

Eigen::Matrix4cd random_rho(unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> n;
  Eigen::Matrix4cd g;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) g(r, c) = {n(gen), n(gen)};
  Eigen::Matrix4cd rho = g * g.adjoint();
  return rho / rho.trace();
}

Eigen::Vector4cd vec(Complex a, Complex b, Complex c, Complex d) {
  Eigen::Vector4cd v;
  v << a, b, c, d;
  return v.normalized();
}

}  // namespace

TEST_CASE("label parsing") {
  for (const char* s : {"0L", "1L", "+L", "-L", "+N", "+F"}) CHECK(logical_name(parse_logical(s)) == s);
  CHECK_THROWS_AS(parse_logical("+X"), ConfigError);
}

TEST_CASE("single-qubit rotations") {
  const Eigen::Matrix2cd x = rotation(pi, Eigen::Vector3d(1, 0, 0));
  CHECK(std::abs(x(0, 1) - Complex(0, -1)) < 1e-15);
  const Eigen::Matrix2cd u = rotation(0.7, Eigen::Vector3d(1, -1, 0.3));
  CHECK((u * u.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(rotation(1.0, Eigen::Vector3d::Zero()), ConfigError);
}

TEST_CASE("entangler phase solve reaches the Bell target") {
  const auto sol = solve_entangler_phase();
  const Eigen::Vector4cd bell = vec(1.0, 0.0, 0.0, Complex(0, -1));
  CHECK(1.0 - state_fidelity(bell, entangler_output(sol.chi)) < 1e-10);
  CHECK(sol.infidelity < 1e-10);
  // chi = 0 leaves a product state
  CHECK(state_fidelity(bell, entangler_output(0.0)) < 0.5 + 1e-12);
}

TEST_CASE("prepared states") {
  const auto zero = prepare_logical(LogicalLabel::ZeroL).amplitudes;
  CHECK((zero - Eigen::Vector4cd(0, 1, 0, 0)).norm() < 1e-15);
  const auto plus = prepare_logical(LogicalLabel::PlusL).amplitudes;
  CHECK(1.0 - state_fidelity(plus, vec(0, 1, 1, 0)) < 1e-10);
  const auto minus = prepare_logical(LogicalLabel::MinusL).amplitudes;
  CHECK(1.0 - state_fidelity(minus, vec(0, 1, -1, 0)) < 1e-10);
  CHECK(std::abs(plus.dot(minus)) < 1e-12);
  const auto n = prepare_logical(LogicalLabel::PlusN).amplitudes;
  CHECK((n - vec(1, 0, 0, 1)).norm() < 1e-15);
  const auto f = prepare_logical(LogicalLabel::PlusF);
  CHECK(f.n_qubits() == 1);
  CHECK(std::abs(f.amplitudes(0) - 1.0 / std::sqrt(2.0)) < 1e-15);
  for (auto l : {LogicalLabel::ZeroL, LogicalLabel::OneL, LogicalLabel::PlusL, LogicalLabel::MinusL,
                 LogicalLabel::PlusN, LogicalLabel::PlusF}) {
    CHECK(std::abs(prepare_logical(l).amplitudes.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("rotated populations read out the DFS coherence") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Eigen::Matrix4cd rho = random_rho(seed);
    const auto p = rotated_basis_populations(rho);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(std::abs(p(0) + p(3) - 0.5 - rho(1, 2).real()) < 1e-12);
    const double fp = fidelity_pm(rho, p, +1);
    const double fm = fidelity_pm(rho, p, -1);
    CHECK(std::abs(fp + fm - rho(1, 1).real() - rho(2, 2).real()) < 1e-12);
    const Eigen::Vector4cd plus = vec(0, 1, 1, 0);
    CHECK(std::abs(fp - plus.dot(rho * plus).real()) < 1e-12);
  }
}

TEST_CASE("fidelity_pm examples") {
  const Eigen::Matrix4cd plus = prepare_logical(LogicalLabel::PlusL).density();
  CHECK(fidelity_pm(plus, rotated_basis_populations(plus), +1) == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::Matrix4cd minus = prepare_logical(LogicalLabel::MinusL).density();
  CHECK(std::abs(fidelity_pm(minus, rotated_basis_populations(minus), +1)) < 1e-12);

  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  rho(1, 1) = 0.48;
  rho(2, 2) = 0.46;
  rho(0, 0) = 0.06;
  rho(1, 2) = rho(2, 1) = 0.40;
  const Eigen::Vector4d p(0.45, 0.05, 0.05, 0.45);
  CHECK(fidelity_pm(rho, p, +1) == doctest::Approx(0.87).epsilon(1e-12));
  const Eigen::Vector4cd target = vec(0, 1, 1, 0);
  CHECK(fidelity_pm(rho, rotated_basis_populations(rho), +1) ==
        doctest::Approx(target.dot(rho * target).real()).epsilon(1e-12));

  CHECK_THROWS_AS(fidelity_pm(rho, Eigen::Vector4d(0.5, 0.5, 0.5, -0.5), +1), ConfigError);
  CHECK_THROWS_AS(fidelity_pm(rho, Eigen::Vector4d(0.5, 0.5, 0.1, 0.1), +1), ConfigError);
  CHECK_THROWS_AS(fidelity_pm(rho, p, 0), ConfigError);
}

TEST_CASE("parity-based entanglement fidelity") {
  CHECK(entanglement_fidelity(0.5, 0.5, 1.0, -1.0) == 1.0);
  CHECK(entanglement_fidelity(0.5, 0.5, 0.0, 0.0) == 0.5);
  const Eigen::Vector4cd bell = vec(1.0, 0.0, 0.0, Complex(0, -1));
  const Eigen::Matrix4cd ideal = bell * bell.adjoint();
  CHECK(parity(ideal, pi / 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(parity(ideal, 3 * pi / 4) == doctest::Approx(-1.0).epsilon(1e-12));
  for (unsigned seed = 30; seed < 40; ++seed) {
    const Eigen::Matrix4cd rho = random_rho(seed);
    const double f = entanglement_fidelity(rho(0, 0).real(), rho(3, 3).real(), parity(rho, pi / 4),
                                           parity(rho, 3 * pi / 4));
    CHECK(std::abs(f - bell.dot(rho * bell).real()) < 1e-12);
  }
}

TEST_CASE("noisy entangled state fidelity matches the overlap") {
  const Eigen::Vector4cd bell = vec(1.0, 0.0, 0.0, Complex(0, -1));
  const auto rho0 = embed_in_f_manifold(QubitState{bell});
  const auto rho = evolve(rho0, build_jump_operators(NoiseParams{2e-4, 3e-4}, 2), 900.0);
  const Eigen::Matrix4cd q = qubit_block(rho);
  const double f = entanglement_fidelity(q(0, 0).real(), q(3, 3).real(), parity(q, pi / 4), parity(q, 3 * pi / 4));
  CHECK(std::abs(f - bell.dot(q * bell).real()) < 1e-9);
  CHECK(f < 1.0);
}

TEST_CASE("embedding and qubit block") {
  const auto state = prepare_logical(LogicalLabel::PlusL);
  const auto rho = embed_in_f_manifold(state);
  CHECK(rho.dim() == 256);
  CHECK((qubit_block(rho) - state.density()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(embed_in_f_manifold(prepare_logical(LogicalLabel::PlusF)).dim() == 16);
}

TEST_CASE("gradient chain") {
  GradientModel m;
  CHECK(frequency_difference(m, Encoding::Clock) == 0.0);
  m.deltaB = 2.70e-7;
  CHECK(frequency_difference(m, Encoding::Clock) == doctest::Approx(2 * 354 * 5.23 * 2.70e-7));
  CHECK(std::abs(frequency_difference(m, Encoding::Clock) - 1.0e-3) / 1.0e-3 < 0.05);
  CHECK(std::abs(1.0 / frequency_difference(m, Encoding::Zeeman) - 2.64) / 2.64 < 0.01);
  GradientModel base;
  CHECK(std::abs(calibrate_delta_b(2.64, base, Encoding::Zeeman) - 2.70e-7) / 2.70e-7 < 0.01);
  CHECK(calibrate_delta_b(1.0, base, Encoding::Zeeman) == doctest::Approx(7.142857e-7).epsilon(1e-6));
  for (auto enc : {Encoding::Clock, Encoding::Zeeman}) {
    GradientModel r = base;
    r.deltaB = calibrate_delta_b(3.7, base, enc);
    CHECK(std::abs(frequency_difference(r, enc) * 3.7 - 1.0) < 1e-12);
    GradientModel twice = r;
    twice.deltaB *= 2;
    CHECK(frequency_difference(twice, enc) == doctest::Approx(2 * frequency_difference(r, enc)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(calibrate_delta_b(0.0, base, Encoding::Clock), ConfigError);
  GradientModel neg;
  neg.clock_coeff = -1;
  CHECK_THROWS_AS(neg.validate(), ConfigError);
  CHECK(parse_encoding("zeeman") == Encoding::Zeeman);
  CHECK_THROWS_AS(parse_encoding("hyperfine"), ConfigError);
}

TEST_CASE("echo phase") {
  const double df = 1e-3, T = 1000.0;
  EchoSchedule none{{}, T};
  auto r = echo_phase(df, none);
  CHECK(r.net_phase == doctest::Approx(2 * pi * df * T));
  CHECK_FALSE(r.logical_flip);
  r = echo_phase(df, EchoSchedule::two_pulse(T));
  CHECK(r.net_phase == 0.0);
  CHECK_FALSE(r.logical_flip);
  r = echo_phase(df, EchoSchedule{{300.0}, T});
  CHECK(r.net_phase == doctest::Approx(2 * pi * df * (2 * 300.0 - T)));
  CHECK(r.logical_flip);
  for (double t1 : {0.1, 123.4, 250.0, 499.9}) {
    CHECK(std::abs(echo_phase(df, EchoSchedule{{t1, t1 + T / 2}, T}).net_phase) < 1e-12);
  }
  CHECK_THROWS_AS(echo_phase(df, EchoSchedule{{600.0, 500.0}, T}), ConfigError);
  CHECK_THROWS_AS(echo_phase(df, EchoSchedule{{0.0}, T}), ConfigError);
  CHECK_THROWS_AS(echo_phase(df, EchoSchedule{{T}, T}), ConfigError);
}

TEST_CASE("quasistatic dephasing") {
  CHECK(simulate_quasistatic_dephasing(LogicalLabel::PlusL, 0.1, 1e4, 1000, 1) == doctest::Approx(1.0).epsilon(1e-15));
  for (auto l : {LogicalLabel::PlusF, LogicalLabel::PlusN, LogicalLabel::PlusL}) {
    CHECK(simulate_quasistatic_dephasing(l, 0.0, 500.0, 100, 2) == doctest::Approx(1.0).epsilon(1e-15));
  }
  const double sigma = 1e-3;
  const double T = std::sqrt(2.0) / (2 * pi * sigma);
  const double c = simulate_quasistatic_dephasing(LogicalLabel::PlusF, sigma, T, 200000, 3);
  CHECK(std::abs(c - std::exp(-1.0)) < 5e-3);
  CHECK(simulate_quasistatic_dephasing(LogicalLabel::PlusF, sigma, T, 1000, 4) ==
        simulate_quasistatic_dephasing(LogicalLabel::PlusF, sigma, T, 1000, 4));
  CHECK_THROWS_AS(dephasing_weight(LogicalLabel::ZeroL), ConfigError);
  CHECK(dephasing_weight(LogicalLabel::PlusN) == 2);
}
