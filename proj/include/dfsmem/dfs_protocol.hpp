#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dfsmem/fitting.hpp"
#include "dfsmem/master_eq.hpp"

namespace dfsmem {

/// Stored states. Two-qubit basis order is |00>, |01>, |10>, |11> with the
/// first ion as the left qubit; 0/1 are |0_F>/|1_F>.
enum class LogicalLabel { ZeroL, OneL, PlusL, MinusL, PlusN, PlusF };

std::string_view logical_name(LogicalLabel label);
/// "0L", "1L", "+L", "-L", "+N", "+F".
LogicalLabel parse_logical(std::string_view text);

/// Pure qubit state on one or two qubits.
struct QubitState {
  Eigen::VectorXcd amplitudes;

  int n_qubits() const { return amplitudes.size() == 2 ? 1 : 2; }
  Eigen::MatrixXcd density() const { return amplitudes * amplitudes.adjoint(); }
};

/// exp(-i theta/2 (n . sigma)); `axis` is normalized internally.
Eigen::Matrix2cd rotation(double theta, const Eigen::Vector3d& axis);
/// U (x) U.
Eigen::Matrix4cd global(const Eigen::Matrix2cd& u);
/// exp(-i chi Z(x)Z).
Eigen::Matrix4cd zz_phase(double chi);

/// State after pi/2_X, ZZ(chi), pi_X, ZZ(chi), pi/2_X applied to |00>.
Eigen::Vector4cd entangler_output(double chi);

struct EntanglerSolution {
  double chi = 0.0;
  double infidelity = 1.0;  // against (|00> - i|11>)/sqrt(2)
};

/// Solves for chi by a dense scan followed by Brent refinement of the
/// fidelity with (|00> - i|11>)/sqrt(2).
EntanglerSolution solve_entangler_phase();

/// Ideal stored state. +L and -L are built along the circuit path: entangler
/// with solved chi, global pi/2 about (x - y)/sqrt(2), then a pi phase on the
/// first qubit for -L. The global phase is fixed so the first nonzero
/// amplitude is real and positive.
QubitState prepare_logical(LogicalLabel label);

/// Squared overlap |<a|b>|^2 of normalized vectors.
double state_fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

/// Computational-basis populations after a global pi/2 pulse averaged over a
/// uniformly random analysis phase.
Eigen::Vector4d rotated_basis_populations(const Eigen::Matrix4cd& rho);

/// F_pm = (rho_{01,01} + rho_{10,10})/2 pm (P00 + P11 - 1/2). Throws
/// ConfigError when the rotated populations are outside [0, 1] or do not sum
/// to 1 within 1e-9.
double fidelity_pm(const Eigen::Matrix4cd& rho, const Eigen::Vector4d& rotated_populations, int sign);

/// <Z(x)Z> after a global pi/2 pulse with analysis phase phi.
double parity(const Eigen::Matrix4cd& rho, double phi);

/// Fidelity with (|00> - i|11>)/sqrt(2) from populations and the parities at
/// phi = pi/4 and 3 pi/4.
double entanglement_fidelity(double p00, double p11, double parity_quarter, double parity_three_quarter);

/// Qubit-level block of an F-manifold density matrix (not renormalized).
Eigen::MatrixXcd qubit_block(const DensityMatrix& rho);

/// Embeds a qubit state into the F-manifold of 1 or 2 ions.
DensityMatrix embed_in_f_manifold(const QubitState& state);

enum class Encoding { Clock, Zeeman };
std::string_view encoding_name(Encoding encoding);
Encoding parse_encoding(std::string_view text);

struct GradientModel {
  double B = 5.23;              // G
  double deltaB = 0.0;          // G, field difference between the ions
  double clock_coeff = 354.0;   // Hz/G^2, second-order clock shift
  double zeeman_coeff = 1.4e6;  // Hz/G, first-order Zeeman qubit slope

  void validate() const;
};

/// Clock: 2 clock_coeff B deltaB. Zeeman: zeeman_coeff deltaB.
double frequency_difference(const GradientModel& model, Encoding encoding);

/// Inverse of frequency_difference for an observed oscillation period.
double calibrate_delta_b(double period, const GradientModel& model, Encoding encoding);

/// Global pi pulses during a storage of length total_T.
struct EchoSchedule {
  std::vector<double> pulse_times;
  double total_T = 0.0;

  /// Throws ConfigError unless times are strictly increasing inside (0, T).
  void validate() const;
  /// Pulses at the given fractions of T.
  static EchoSchedule from_fractions(double T, std::span<const double> fractions);
  /// Pulses at T/4 and 3T/4.
  static EchoSchedule two_pulse(double T);
};

struct EchoResult {
  double net_phase = 0.0;  // rad
  bool logical_flip = false;
};

/// Accumulated relative phase 2 pi delta_f sum(+-duration), sign toggling at
/// each pulse. An odd pulse count leaves |01> and |10> exchanged.
EchoResult echo_phase(double delta_f, const EchoSchedule& schedule);

/// Sensitivity of a state's coherence to a collective detuning: 1 (+F),
/// 0 (DFS states), 2 (+N). Throws ConfigError for basis states.
int dephasing_weight(LogicalLabel label);

/// |mean over shots of exp(i w 2 pi delta T)| with delta ~ Normal(0, sigma)
/// drawn per shot from a counter-based stream (shot i uses counter i).
double simulate_quasistatic_dephasing(LogicalLabel label, double sigma_hz, double T, std::int64_t n_shots,
                                      std::uint64_t seed);

/// Fidelity dataset (1 + C(T))/2 with R = n_shots per time, C from
/// simulate_quasistatic_dephasing with the same shot stream at every time.
DecayDataset quasistatic_dataset(LogicalLabel label, double sigma_hz, std::span<const double> times,
                                 std::int64_t n_shots, std::uint64_t seed);

}  // namespace dfsmem
