#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace dfsmem {

/// Motional modes driven by the spin-dependent force.
struct ModeSet {
  std::vector<double> mode_freqs;  // rad/s
  double mu = 0.0;                 // beat-note angular frequency, rad/s

  /// delta_j = mu - omega_j
  std::vector<double> detunings() const;
  void validate() const;

  /// Three transverse modes at 2pi x (1.298, 1.347, 1.381) MHz driven at
  /// mu = 2pi x 1.396 MHz.
  static ModeSet three_ion_transverse();
};

/// Piecewise-constant phase waveform over equal-length segments.
struct PhaseSequence {
  std::vector<double> phases;  // rad
  double total_duration = 0.0;  // s
  double ramp_time = 0.0;       // s, sin^2 rise and fall inside each segment
  bool antisymmetric = false;

  std::size_t n_segments() const { return phases.size(); }
  double segment_duration() const { return total_duration / static_cast<double>(phases.size()); }

  /// Throws ConfigError on empty phases, non-positive duration, ramps that do
  /// not fit in a segment, or violated anti-symmetry.
  void validate() const;

  /// Antisymmetric sequence from its first half: phases = h, -reverse(h).
  static PhaseSequence from_half(std::span<const double> half, double duration, double ramp);

  /// Key-value text: n_segments, duration_s, ramp_s, antisymmetric, phases.
  void write(std::ostream& out) const;
  static PhaseSequence read(std::istream& in);
};

struct DriveProfile {
  double base_amplitude = 1.0;  // rad/s (normalized Rabi scale)
  bool ramped = true;
};

/// Amplitude Omega(t) at time t in [0, T].
double drive_amplitude(const PhaseSequence& seq, const DriveProfile& drive, double t);

/// alpha(delta) = int_0^T Omega(t) exp(i(delta t + phi(t))) dt, in closed form
/// for both the flat core and the sin^2 ramps of every segment.
std::complex<double> displacement(const PhaseSequence& seq, const DriveProfile& drive, double delta);

/// |alpha(delta_j)|^2 / (Omega T)^2 for each mode.
std::vector<double> mode_residuals(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes);

/// Sum of mode_residuals; 0 for a zero-amplitude drive.
double closure_residual(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes);

/// sum_j c_j Im int_0^T dt int_0^t dt' f_j(t) conj(f_j(t')), with
/// f_j(t) = Omega(t) exp(i(delta_j t + phi(t))). The inner integral is exact;
/// the outer one uses Gauss-Legendre quadrature on every smooth piece.
/// Throws ConfigError when couplings and modes differ in length.
double geometric_phase(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes,
                       std::span<const double> couplings);

struct NelderMeadOptions {
  int max_iterations = 20000;
  double f_tol = 1e-16;  // absolute spread of simplex values
  double x_tol = 1e-12;  // simplex diameter
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

/// Derivative-free simplex minimization (standard reflection / expansion /
/// contraction / shrink coefficients).
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options = {});

struct OptimizeOptions {
  int n_segments = 12;
  double duration = 150e-6;  // s
  double ramp = 2e-6;        // s
  std::uint64_t seed = 0;
  int restarts = 8;
  double target = 1e-6;
  /// Polishing stops once a fresh simplex improves the residual by less than this.
  double improvement_tol = 1e-12;
  int threads = 0;  // 0 = hardware concurrency
  DriveProfile drive;
  NelderMeadOptions simplex;
};

struct OptimizeResult {
  PhaseSequence sequence;
  double residual = 0.0;
  bool attained = false;
  int best_restart = -1;
  std::vector<double> restart_residuals;
};

/// Multi-start simplex search over the n/2 free phases of an antisymmetric
/// sequence. Restart r starts from phases uniform in (-pi, pi) drawn with seed
/// derive_seed(seed, r); the best restart is chosen by (residual, index).
/// Throws ConfigError for odd segment counts or fewer than one restart.
OptimizeResult optimize_sequence(const ModeSet& modes, const OptimizeOptions& options = {});

}  // namespace dfsmem
