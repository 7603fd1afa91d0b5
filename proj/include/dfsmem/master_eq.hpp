#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include "dfsmem/levels.hpp"

namespace dfsmem {

using Complex = std::complex<double>;

/// Hermitian, unit-trace, positive semidefinite matrix over a composite level
/// space. The constructor validates all three properties.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenTol = -1e-9;

  DensityMatrix(CompositeSpace space, Eigen::MatrixXcd matrix);

  /// |psi><psi| after normalizing psi.
  static DensityMatrix pure(CompositeSpace space, const Eigen::VectorXcd& psi);
  /// Product basis state, one level per ion.
  static DensityMatrix basis(CompositeSpace space, std::span<const ZeemanLevel> levels);

  const CompositeSpace& space() const { return space_; }
  const Eigen::MatrixXcd& matrix() const { return rho_; }
  std::size_t dim() const { return space_.dim(); }

  Complex operator()(std::size_t r, std::size_t c) const { return rho_(r, c); }
  Complex element(std::span<const ZeemanLevel> row, std::span<const ZeemanLevel> col) const;
  double population(std::span<const ZeemanLevel> levels) const;

  double min_eigenvalue() const;

  /// Flat record: header (dimension, per-ion level labels) then row-major
  /// (real, imag) pairs, printed with round-trip precision.
  void write(std::ostream& out) const;
  static DensityMatrix read(std::istream& in);

 private:
  CompositeSpace space_;
  Eigen::MatrixXcd rho_;
};

enum class DephasingMode { Independent, Collective };

struct NoiseParams {
  double gamma_leak = 0.0;     // 1/s, every neighboring Zeeman channel
  double gamma_dephase = 0.0;  // 1/s, qubit-level dephasing
  DephasingMode dephasing_mode = DephasingMode::Independent;
  bool cross_manifold_leak = false;

  /// Throws ConfigError on negative or non-finite rates.
  void validate() const;
};

enum class JumpKind { LeakUp, LeakDown, Dephase };

/// One Lindblad operator. Leak operators are amplitude * |target><source| on
/// `ion`. Dephase operators are amplitude * (|0_F><0_F| - |1_F><1_F|) on
/// `ion`, or summed over all ions when `ion == kAllIons` (collective mode).
struct JumpOperator {
  static constexpr int kAllIons = 0;

  int ion = 1;  // 1-based
  JumpKind kind = JumpKind::LeakUp;
  ZeemanLevel source;
  ZeemanLevel target;
  double amplitude = 0.0;  // sqrt(rate)
};

/// 28 * n_ions leakage operators plus n_ions independent (or one collective)
/// dephasing operator. Throws ConfigError unless n_ions is 1 or 2.
std::vector<JumpOperator> build_jump_operators(const NoiseParams& params, int n_ions);

/// Diagonal Hamiltonian term: `angular_frequency` * |level><level| on `ion`.
struct LevelShift {
  int ion = 1;  // 1-based
  ZeemanLevel level;
  double angular_frequency = 0.0;  // rad/s
};

enum class Integrator { Exponential, RungeKutta4 };

struct EvolveOptions {
  Integrator method = Integrator::Exponential;
  /// Upper bound on the RK4 step; the step is also capped at 0.1 / ||L||.
  double rk4_max_step = 10.0;
  /// Optional diagonal detunings (zero by default: the noise model itself has
  /// no coherent part).
  std::vector<LevelShift> shifts;
};

/// Time-independent Lindblad generator acting matrix-free on density matrices
/// of a composite F-manifold space. Every jump operator is either a
/// single-entry leak on one ion or diagonal, so the action reduces to a
/// diagonal Hadamard factor plus block moves between levels.
class Liouvillian {
 public:
  Liouvillian(const CompositeSpace& space, std::span<const JumpOperator> ops,
              std::span<const LevelShift> shifts = {});

  /// out = L(rho)
  void apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const;

  /// Upper bound on the induced 1-norm of L on vec(rho).
  double norm_bound() const { return norm_bound_; }

  /// exp(L t) rho by scaled truncated Taylor series.
  Eigen::MatrixXcd exp_action(const Eigen::MatrixXcd& rho, double t) const;

  /// Fixed-step classical RK4. Throws NumericalError (with the time reached)
  /// when the state stops being finite.
  Eigen::MatrixXcd rk4(const Eigen::MatrixXcd& rho, double t, double max_step) const;

  /// Dense superoperator on column-major vec(rho). For tests on small spaces.
  Eigen::MatrixXcd dense() const;

 private:
  struct Move {
    std::size_t ion;     // 0-based
    std::size_t source;  // offset of the source digit (level index * stride)
    std::size_t target;
    double rate;
  };

  std::size_t dim_ = 0;
  Eigen::MatrixXcd diagonal_;  // elementwise factor
  std::vector<Move> moves_;
  // Per ion: composite offsets whose digit for that ion is zero.
  std::vector<std::vector<std::size_t>> complement_;
  double norm_bound_ = 0.0;
};

/// rho(T) under the jump operators. T = 0 returns an exact copy.
DensityMatrix evolve(const DensityMatrix& rho0, std::span<const JumpOperator> ops, double T,
                     const EvolveOptions& options = {});

/// Population outside {|0_F>, |1_F>} on any ion.
double leakage_probability(const DensityMatrix& rho);

/// Population with every ion in a qubit level.
double survival_probability(const DensityMatrix& rho);

/// Single-ion leakage from |0_F> after time T at leak rate gamma.
double single_ion_leakage(double gamma, double T);

/// gamma such that single_ion_leakage(gamma, T) == target_leak, by bracketed
/// root finding. Throws ConfigError for targets outside (0, 1) and
/// NumericalError when the target exceeds the reachable steady-state leakage.
double fit_gamma_to_leakage(double target_leak, double T);

}  // namespace dfsmem
