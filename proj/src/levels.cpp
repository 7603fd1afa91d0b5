#include "dfsmem/levels.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fmt/format.h>

#include "dfsmem/error.hpp"

namespace dfsmem {

namespace {

std::string_view manifold_tag(Manifold m) {
  switch (m) {
    case Manifold::S_half:
      return "S1/2";
    case Manifold::D_5half:
      return "D5/2";
    case Manifold::F_7half:
      return "F7/2";
  }
  return "?";
}

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("malformed level label '{}'", whole));
  }
  return value;
}

}  // namespace

ZeemanLevel ZeemanLevel::make(Manifold manifold, int F, int mF) {
  if (F < 0 || std::abs(mF) > F) {
    throw ConfigError(fmt::format("invalid Zeeman level F={} mF={}", F, mF));
  }
  return ZeemanLevel{manifold, F, mF};
}

ZeemanLevel ZeemanLevel::parse(std::string_view text) {
  const auto colon = text.find(':');
  const auto comma = text.find(',');
  if (colon == std::string_view::npos || comma == std::string_view::npos || comma < colon) {
    throw ConfigError(fmt::format("malformed level label '{}'", text));
  }
  const auto tag = text.substr(0, colon);
  Manifold manifold;
  if (tag == "S1/2") {
    manifold = Manifold::S_half;
  } else if (tag == "D5/2") {
    manifold = Manifold::D_5half;
  } else if (tag == "F7/2") {
    manifold = Manifold::F_7half;
  } else {
    throw ConfigError(fmt::format("unknown manifold in level label '{}'", text));
  }
  auto f_part = text.substr(colon + 1, comma - colon - 1);
  auto m_part = text.substr(comma + 1);
  if (!f_part.starts_with("F=") || !m_part.starts_with("mF=")) {
    throw ConfigError(fmt::format("malformed level label '{}'", text));
  }
  return make(manifold, parse_int(f_part.substr(2), text), parse_int(m_part.substr(3), text));
}

std::string ZeemanLevel::label() const { return fmt::format("{}:F={},mF={}", manifold_tag(manifold), F, mF); }

LevelSpace::LevelSpace(std::vector<ZeemanLevel> levels) : levels_(std::move(levels)) {
  lookup_.reserve(levels_.size());
  for (std::size_t i = 0; i < levels_.size(); ++i) lookup_.emplace_back(levels_[i], i);
  std::sort(lookup_.begin(), lookup_.end());
  const auto dup = std::adjacent_find(lookup_.begin(), lookup_.end(),
                                      [](const auto& a, const auto& b) { return a.first == b.first; });
  if (dup != lookup_.end()) {
    throw ConfigError(fmt::format("duplicate level {} in level space", dup->first.label()));
  }
}

bool LevelSpace::contains(const ZeemanLevel& level) const {
  const auto it = std::lower_bound(lookup_.begin(), lookup_.end(), level,
                                   [](const auto& entry, const ZeemanLevel& l) { return entry.first < l; });
  return it != lookup_.end() && it->first == level;
}

std::size_t LevelSpace::index_of(const ZeemanLevel& level) const {
  const auto it = std::lower_bound(lookup_.begin(), lookup_.end(), level,
                                   [](const auto& entry, const ZeemanLevel& l) { return entry.first < l; });
  if (it == lookup_.end() || !(it->first == level)) {
    throw ConfigError(fmt::format("level {} is not in the level space", level.label()));
  }
  return it->second;
}

LevelSpace enumerate_f_manifold() {
  std::vector<ZeemanLevel> levels;
  levels.reserve(16);
  for (int F : {3, 4}) {
    for (int m = -F; m <= F; ++m) levels.push_back(ZeemanLevel{Manifold::F_7half, F, m});
  }
  return LevelSpace(std::move(levels));
}

LevelSpace f_qubit_levels() { return LevelSpace({kZeroF, kOneF}); }

std::vector<LevelPair> neighbor_pairs(bool include_cross_manifold) {
  std::vector<LevelPair> pairs;
  for (int F : {3, 4}) {
    for (int m = -F; m < F; ++m) {
      pairs.push_back({ZeemanLevel{Manifold::F_7half, F, m}, ZeemanLevel{Manifold::F_7half, F, m + 1}});
    }
  }
  if (include_cross_manifold) {
    for (int m = -3; m <= 3; ++m) {
      pairs.push_back({ZeemanLevel{Manifold::F_7half, 3, m}, ZeemanLevel{Manifold::F_7half, 4, m}});
    }
  }
  return pairs;
}

std::vector<LeakChannel> leak_channels(bool include_cross_manifold) {
  std::vector<LeakChannel> channels;
  for (const auto& pair : neighbor_pairs(include_cross_manifold)) {
    channels.push_back({pair.lower, pair.upper});
    channels.push_back({pair.upper, pair.lower});
  }
  return channels;
}

CompositeSpace::CompositeSpace(std::vector<LevelSpace> ions) : ions_(std::move(ions)) {
  strides_.assign(ions_.size(), 1);
  dim_ = 1;
  for (std::size_t i = ions_.size(); i-- > 0;) {
    strides_[i] = dim_;
    dim_ *= ions_[i].size();
  }
}

CompositeSpace CompositeSpace::f_manifold(int n_ions) {
  return CompositeSpace(std::vector<LevelSpace>(static_cast<std::size_t>(n_ions), enumerate_f_manifold()));
}

CompositeSpace CompositeSpace::f_qubits(int n_ions) {
  return CompositeSpace(std::vector<LevelSpace>(static_cast<std::size_t>(n_ions), f_qubit_levels()));
}

std::size_t CompositeSpace::index(std::span<const std::size_t> per_ion) const {
  if (per_ion.size() != ions_.size()) throw ConfigError("wrong number of per-ion indices");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < per_ion.size(); ++i) {
    if (per_ion[i] >= ions_[i].size()) throw ConfigError("per-ion index out of range");
    idx += per_ion[i] * strides_[i];
  }
  return idx;
}

std::size_t CompositeSpace::index_of(std::span<const ZeemanLevel> levels) const {
  if (levels.size() != ions_.size()) throw ConfigError("wrong number of per-ion levels");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) idx += ions_[i].index_of(levels[i]) * strides_[i];
  return idx;
}

std::vector<std::size_t> CompositeSpace::digits(std::size_t composite) const {
  std::vector<std::size_t> out(ions_.size());
  for (std::size_t i = 0; i < ions_.size(); ++i) out[i] = digit(composite, i);
  return out;
}

}  // namespace dfsmem
