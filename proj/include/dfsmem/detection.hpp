#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dfsmem/levels.hpp"
#include "dfsmem/rng.hpp"

namespace dfsmem {

enum class Signal { Bright, Dark };

/// Bright/dark outcome of the four sequential detection stages for one ion.
struct DetectionPattern {
  std::array<Signal, 4> stages{Signal::Dark, Signal::Dark, Signal::Dark, Signal::Dark};

  /// Four characters from {B, D}, case-insensitive.
  static DetectionPattern parse(std::string_view text);
  std::string to_string() const;
  /// Bit i set when stage i is bright.
  unsigned code() const;
  static DetectionPattern from_code(unsigned code);

  friend bool operator==(const DetectionPattern&, const DetectionPattern&) = default;
};

enum class DetectionOutcome { LeakToSOrHop, ZeroF, OneF, ZeemanLeak, Discard };

std::string_view outcome_name(DetectionOutcome outcome);

/// Lookup table from pattern to outcome. The default table:
///   B??? -> LeakToSOrHop, DBDD -> ZeroF, DDBD -> OneF,
///   DDDB and DDDD -> ZeemanLeak, everything else -> Discard.
class PatternTable {
 public:
  PatternTable();

  DetectionOutcome interpret(const DetectionPattern& pattern) const { return table_[pattern.code()]; }

  /// Replace the outcome of one dark-first pattern. Patterns whose first
  /// stage is bright always short-circuit and cannot be overridden.
  void set(const DetectionPattern& pattern, DetectionOutcome outcome);

 private:
  std::array<DetectionOutcome, 16> table_;
};

/// Interpret with the default table.
DetectionOutcome interpret(const DetectionPattern& pattern);

/// Retained outcome probabilities for one input state.
struct ConfusionRow {
  double p_zero = 0.0;
  double p_one = 0.0;
  double p_zeeman = 0.0;
};

/// Per-input-state detection probabilities over {ZeroF, OneF, ZeemanLeak}.
/// Rows are renormalized on insertion (the discarded fraction is removed).
class ConfusionMatrix {
 public:
  /// Throws ConfigError on negative entries or an all-zero row.
  void set_row(const ZeemanLevel& state, ConfusionRow row);

  bool has_row(const ZeemanLevel& state) const { return rows_.count(state) != 0; }
  /// Throws ConfigError for a state without a row.
  const ConfusionRow& row(const ZeemanLevel& state) const;

  /// Row lookup with a fallback for leaked F7/2 levels that were not
  /// calibrated: |F, mF> uses the row of |F, sign(mF)>.
  const ConfusionRow& resolve(const ZeemanLevel& state) const;

  const std::map<ZeemanLevel, ConfusionRow>& rows() const { return rows_; }

  /// Plain text: one row per line, "<level label> <P_0F> <P_1F> <P_Zeeman>".
  /// Blank lines and '#' comments are ignored. Values may be fractions or
  /// percentages; each row is renormalized.
  static ConfusionMatrix parse(std::istream& in);
  void write(std::ostream& out) const;

 private:
  std::map<ZeemanLevel, ConfusionRow> rows_;
};

/// The calibrated six-row table (|0_F>, |1_F>, F(3,+1), F(3,-1), F(4,+1), F(4,-1)).
ConfusionMatrix default_confusion();

/// Error-free detection: |0_F> -> ZeroF, |1_F> -> OneF, every other F7/2
/// level -> ZeemanLeak.
ConfusionMatrix perfect_confusion();

/// Draws outcomes from confusion rows with an owned generator.
class DetectionSampler {
 public:
  DetectionSampler(const ConfusionMatrix& cm, std::uint64_t seed) : cm_(&cm), rng_(seed) {}

  /// Throws ConfigError when `state` has no row (no fallback).
  DetectionOutcome sample(const ZeemanLevel& state);
  /// As sample(), with the leaked-level fallback of ConfusionMatrix::resolve.
  DetectionOutcome sample_resolved(const ZeemanLevel& state);

  static DetectionOutcome draw(const ConfusionRow& row, double u);

 private:
  const ConfusionMatrix* cm_;
  Rng rng_;
};

/// One sample, deterministic in `seed`.
DetectionOutcome simulate_detection(const ZeemanLevel& state, const ConfusionMatrix& cm, std::uint64_t seed);

/// Per-category counts.
struct OutcomeCounts {
  std::int64_t leak_to_s_or_hop = 0;
  std::int64_t zero_f = 0;
  std::int64_t one_f = 0;
  std::int64_t zeeman_leak = 0;
  std::int64_t discard = 0;

  void add(DetectionOutcome outcome);
  std::int64_t total() const { return leak_to_s_or_hop + zero_f + one_f + zeeman_leak + discard; }
};

}  // namespace dfsmem
