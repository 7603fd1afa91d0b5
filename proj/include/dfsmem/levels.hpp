#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dfsmem {

enum class Manifold { S_half, D_5half, F_7half };

/// Hyperfine Zeeman sublevel |manifold, F, mF>. A label only; no energies.
struct ZeemanLevel {
  Manifold manifold = Manifold::F_7half;
  int F = 0;
  int mF = 0;

  /// Throws ConfigError when |mF| > F.
  static ZeemanLevel make(Manifold manifold, int F, int mF);

  /// Parses the serialized form, e.g. "F7/2:F=3,mF=-1".
  static ZeemanLevel parse(std::string_view text);
  std::string label() const;

  friend auto operator<=>(const ZeemanLevel&, const ZeemanLevel&) = default;
};

// Named qubit levels.
inline constexpr ZeemanLevel kZeroS{Manifold::S_half, 0, 0};
inline constexpr ZeemanLevel kOneS{Manifold::S_half, 1, 0};
inline constexpr ZeemanLevel kZeroD{Manifold::D_5half, 2, 0};
inline constexpr ZeemanLevel kOneD{Manifold::D_5half, 3, 0};
inline constexpr ZeemanLevel kZeroF{Manifold::F_7half, 3, 0};
inline constexpr ZeemanLevel kOneF{Manifold::F_7half, 4, 0};
inline constexpr ZeemanLevel kZeroPrime{Manifold::S_half, 0, 0};
inline constexpr ZeemanLevel kOnePrime{Manifold::S_half, 1, 1};

/// Ordered set of levels with a bijective index map onto 0..n-1.
class LevelSpace {
 public:
  LevelSpace() = default;
  /// Throws ConfigError on duplicate levels.
  explicit LevelSpace(std::vector<ZeemanLevel> levels);

  std::size_t size() const { return levels_.size(); }
  const ZeemanLevel& operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<ZeemanLevel>& levels() const { return levels_; }
  auto begin() const { return levels_.begin(); }
  auto end() const { return levels_.end(); }

  bool contains(const ZeemanLevel& level) const;
  /// Throws ConfigError if the level is not a member.
  std::size_t index_of(const ZeemanLevel& level) const;

  friend bool operator==(const LevelSpace& a, const LevelSpace& b) { return a.levels_ == b.levels_; }

 private:
  std::vector<ZeemanLevel> levels_;
  // Sorted (level, index) pairs for lookup.
  std::vector<std::pair<ZeemanLevel, std::size_t>> lookup_;
};

/// The 16 F7/2 levels: (F=3, mF=-3..3) then (F=4, mF=-4..4).
LevelSpace enumerate_f_manifold();

/// The two qubit levels {|0_F>, |1_F>} in that order.
LevelSpace f_qubit_levels();

/// Undirected neighbor pair, `lower.mF + 1 == upper.mF` within one F
/// (or, with cross-manifold coupling enabled, equal mF across F=3 and F=4).
struct LevelPair {
  ZeemanLevel lower;
  ZeemanLevel upper;
};

/// All neighboring pairs of the F7/2 manifold: 6 within F=3 and 8 within F=4.
/// `include_cross_manifold` adds the 7 F=3 <-> F=4 pairs with equal mF; it is
/// off everywhere by default.
std::vector<LevelPair> neighbor_pairs(bool include_cross_manifold = false);

/// Directed leakage channel source -> target.
struct LeakChannel {
  ZeemanLevel source;
  ZeemanLevel target;
};

/// Both directions of every neighbor pair (28 channels per ion by default).
std::vector<LeakChannel> leak_channels(bool include_cross_manifold = false);

/// Tensor product of per-ion level spaces. Ion 0 is the most significant
/// digit of the composite index.
class CompositeSpace {
 public:
  CompositeSpace() = default;
  explicit CompositeSpace(std::vector<LevelSpace> ions);

  static CompositeSpace f_manifold(int n_ions);
  static CompositeSpace f_qubits(int n_ions);

  std::size_t n_ions() const { return ions_.size(); }
  std::size_t dim() const { return dim_; }
  const LevelSpace& ion(std::size_t i) const { return ions_[i]; }

  /// Stride of ion i's digit in the composite index.
  std::size_t stride(std::size_t i) const { return strides_[i]; }

  std::size_t index(std::span<const std::size_t> per_ion) const;
  std::size_t index_of(std::span<const ZeemanLevel> levels) const;
  std::vector<std::size_t> digits(std::size_t composite) const;
  std::size_t digit(std::size_t composite, std::size_t ion) const {
    return (composite / strides_[ion]) % ions_[ion].size();
  }

  friend bool operator==(const CompositeSpace& a, const CompositeSpace& b) { return a.ions_ == b.ions_; }

 private:
  std::vector<LevelSpace> ions_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 1;
};

}  // namespace dfsmem
