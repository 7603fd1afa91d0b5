#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dfsmem/detection.hpp"
#include "dfsmem/dfs_protocol.hpp"
#include "dfsmem/master_eq.hpp"

namespace dfsmem {

/// One storage experiment: prepare, store with echoes, detect.
struct StorageScenario {
  LogicalLabel state = LogicalLabel::ZeroL;
  NoiseParams noise;
  std::vector<double> times;  // storage times, s
  std::vector<double> echo_fractions{0.25, 0.75};
  GradientModel gradient;
  Encoding encoding = Encoding::Clock;
  ConfusionMatrix confusion = default_confusion();
  std::int64_t repetitions = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Counts for one storage time. `successes` counts all shots;
/// `leak_discarded_successes` counts successes among the
/// `repetitions - leak_count` shots without a detected leak.
struct StoragePoint {
  double T = 0.0;
  std::int64_t repetitions = 0;
  std::int64_t successes = 0;
  std::int64_t leak_discarded_successes = 0;
  std::int64_t leak_count = 0;

  double raw_fidelity() const;
  double discarded_fidelity() const;
};

/// Exact fidelity and qubit-subspace survival of the stored state before
/// detection, for one storage time.
struct StorageState {
  DensityMatrix rho;
  double fidelity = 0.0;  // overlap with the (frame-corrected) target
  double survival = 0.0;  // population with every ion in a qubit level
};

/// Evolves the prepared state through the echo schedule. The field gradient
/// enters as a detuning of |1_F> on the second ion; every echo is an ideal
/// global pi pulse exchanging |0_F> and |1_F> on each ion.
StorageState evolve_storage(const StorageScenario& scenario, double T);

/// Runs the whole scenario. Time i uses seed derive_seed(seed, i).
///
/// Each shot samples a level configuration from the diagonal of the final
/// state in the measurement frame (computational basis for basis-state
/// targets; for superpositions, a unitary mapping the target to the
/// reference basis state |0_F 1_F> or |0_F>), then samples per-ion outcomes
/// from the confusion rows. Success means every ion reads its reference
/// level; a leak is flagged when any ion reads ZeemanLeak.
std::vector<StoragePoint> simulate_storage(const StorageScenario& scenario);

/// CSV with header
/// `T_seconds,repetitions,successes,leak_discarded_successes,leak_count`.
void write_storage_csv(std::ostream& out, const std::vector<StoragePoint>& points);

}  // namespace dfsmem
