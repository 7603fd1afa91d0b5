#include "dfsmem/detection.hpp"

#include <cctype>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>

#include "dfsmem/error.hpp"

namespace dfsmem {

namespace {

// Calibrated multi-state detection outcomes, in percent.
constexpr const char* kDefaultTable = R"(# state                P_0F    P_1F    P_Zeeman
F7/2:F=3,mF=0    99.0    0.05    0.95
F7/2:F=4,mF=0    0.3     93.4    6.3
F7/2:F=3,mF=1    0.2     0.1     99.7
F7/2:F=3,mF=-1   0.4     0.2     99.4
F7/2:F=4,mF=1    0.2     0.6     99.2
F7/2:F=4,mF=-1   0.2     0.7     99.1
)";

}  // namespace

DetectionPattern DetectionPattern::parse(std::string_view text) {
  if (text.size() != 4) throw ConfigError(fmt::format("detection pattern '{}' must have four stages", text));
  DetectionPattern p;
  for (std::size_t i = 0; i < 4; ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    if (c == 'B') {
      p.stages[i] = Signal::Bright;
    } else if (c == 'D') {
      p.stages[i] = Signal::Dark;
    } else {
      throw ConfigError(fmt::format("detection pattern '{}' may only contain B and D", text));
    }
  }
  return p;
}

std::string DetectionPattern::to_string() const {
  std::string s;
  for (auto st : stages) s.push_back(st == Signal::Bright ? 'B' : 'D');
  return s;
}

unsigned DetectionPattern::code() const {
  unsigned c = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (stages[i] == Signal::Bright) c |= 1u << i;
  }
  return c;
}

DetectionPattern DetectionPattern::from_code(unsigned code) {
  DetectionPattern p;
  for (std::size_t i = 0; i < 4; ++i) p.stages[i] = (code >> i) & 1u ? Signal::Bright : Signal::Dark;
  return p;
}

std::string_view outcome_name(DetectionOutcome outcome) {
  switch (outcome) {
    case DetectionOutcome::LeakToSOrHop:
      return "leak_to_s_or_hop";
    case DetectionOutcome::ZeroF:
      return "zero_f";
    case DetectionOutcome::OneF:
      return "one_f";
    case DetectionOutcome::ZeemanLeak:
      return "zeeman_leak";
    case DetectionOutcome::Discard:
      return "discard";
  }
  return "unknown";
}

PatternTable::PatternTable() {
  for (unsigned c = 0; c < 16; ++c) {
    table_[c] = (c & 1u) ? DetectionOutcome::LeakToSOrHop : DetectionOutcome::Discard;
  }
  table_[DetectionPattern::parse("DBDD").code()] = DetectionOutcome::ZeroF;
  table_[DetectionPattern::parse("DDBD").code()] = DetectionOutcome::OneF;
  table_[DetectionPattern::parse("DDDB").code()] = DetectionOutcome::ZeemanLeak;
  table_[DetectionPattern::parse("DDDD").code()] = DetectionOutcome::ZeemanLeak;
}

void PatternTable::set(const DetectionPattern& pattern, DetectionOutcome outcome) {
  if (pattern.stages[0] == Signal::Bright) {
    throw ConfigError(fmt::format("pattern {} starts bright and cannot be remapped", pattern.to_string()));
  }
  table_[pattern.code()] = outcome;
}

DetectionOutcome interpret(const DetectionPattern& pattern) {
  static const PatternTable table;
  return table.interpret(pattern);
}

void ConfusionMatrix::set_row(const ZeemanLevel& state, ConfusionRow row) {
  for (double p : {row.p_zero, row.p_one, row.p_zeeman}) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ConfigError(fmt::format("confusion row for {} has an invalid entry {}", state.label(), p));
    }
  }
  const double total = row.p_zero + row.p_one + row.p_zeeman;
  if (total <= 0.0) throw ConfigError(fmt::format("confusion row for {} is all zero", state.label()));
  rows_[state] = ConfusionRow{row.p_zero / total, row.p_one / total, row.p_zeeman / total};
}

const ConfusionRow& ConfusionMatrix::row(const ZeemanLevel& state) const {
  const auto it = rows_.find(state);
  if (it == rows_.end()) throw ConfigError(fmt::format("no confusion row for input state {}", state.label()));
  return it->second;
}

const ConfusionRow& ConfusionMatrix::resolve(const ZeemanLevel& state) const {
  if (const auto it = rows_.find(state); it != rows_.end()) return it->second;
  if (state.manifold == Manifold::F_7half && state.mF != 0) {
    const ZeemanLevel nearest{Manifold::F_7half, state.F, state.mF > 0 ? 1 : -1};
    if (const auto it = rows_.find(nearest); it != rows_.end()) return it->second;
  }
  return row(state);
}

ConfusionMatrix ConfusionMatrix::parse(std::istream& in) {
  ConfusionMatrix cm;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string label;
    if (!(ss >> label)) continue;
    ConfusionRow row;
    if (!(ss >> row.p_zero >> row.p_one >> row.p_zeeman)) {
      throw ConfigError(fmt::format("confusion table line {}: expected a label and three probabilities", line_no));
    }
    std::string extra;
    if (ss >> extra) throw ConfigError(fmt::format("confusion table line {}: trailing field '{}'", line_no, extra));
    const auto level = ZeemanLevel::parse(label);
    if (cm.has_row(level)) throw ConfigError(fmt::format("confusion table line {}: duplicate row {}", line_no, label));
    cm.set_row(level, row);
  }
  if (cm.rows_.empty()) throw ConfigError("confusion table has no rows");
  return cm;
}

void ConfusionMatrix::write(std::ostream& out) const {
  out << "# state P_0F P_1F P_Zeeman\n";
  for (const auto& [level, row] : rows_) {
    out << fmt::format("{} {} {} {}\n", level.label(), row.p_zero, row.p_one, row.p_zeeman);
  }
}

ConfusionMatrix default_confusion() {
  std::istringstream in(kDefaultTable);
  return ConfusionMatrix::parse(in);
}

ConfusionMatrix perfect_confusion() {
  ConfusionMatrix cm;
  for (const auto& level : enumerate_f_manifold()) {
    if (level == kZeroF) {
      cm.set_row(level, {1.0, 0.0, 0.0});
    } else if (level == kOneF) {
      cm.set_row(level, {0.0, 1.0, 0.0});
    } else {
      cm.set_row(level, {0.0, 0.0, 1.0});
    }
  }
  return cm;
}

DetectionOutcome DetectionSampler::draw(const ConfusionRow& row, double u) {
  if (u < row.p_zero) return DetectionOutcome::ZeroF;
  if (u < row.p_zero + row.p_one) return DetectionOutcome::OneF;
  return DetectionOutcome::ZeemanLeak;
}

DetectionOutcome DetectionSampler::sample(const ZeemanLevel& state) { return draw(cm_->row(state), rng_.uniform()); }

DetectionOutcome DetectionSampler::sample_resolved(const ZeemanLevel& state) {
  return draw(cm_->resolve(state), rng_.uniform());
}

DetectionOutcome simulate_detection(const ZeemanLevel& state, const ConfusionMatrix& cm, std::uint64_t seed) {
  DetectionSampler sampler(cm, seed);
  return sampler.sample(state);
}

void OutcomeCounts::add(DetectionOutcome outcome) {
  switch (outcome) {
    case DetectionOutcome::LeakToSOrHop:
      ++leak_to_s_or_hop;
      break;
    case DetectionOutcome::ZeroF:
      ++zero_f;
      break;
    case DetectionOutcome::OneF:
      ++one_f;
      break;
    case DetectionOutcome::ZeemanLeak:
      ++zeeman_leak;
      break;
    case DetectionOutcome::Discard:
      ++discard;
      break;
  }
}

}  // namespace dfsmem
