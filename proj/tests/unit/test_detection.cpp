#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dfsmem/detection.hpp"
#include "dfsmem/error.hpp"

using namespace dfsmem;

TEST_CASE("pattern parsing and codes") {
  const auto p = DetectionPattern::parse("dBdd");
  CHECK(p.to_string() == "DBDD");
  CHECK(p.code() == 2u);
  for (unsigned c = 0; c < 16; ++c) CHECK(DetectionPattern::from_code(c).code() == c);
  CHECK_THROWS_AS(DetectionPattern::parse("BDD"), ConfigError);
  CHECK_THROWS_AS(DetectionPattern::parse("BDDX"), ConfigError);
}

TEST_CASE("interpreter table") {
  CHECK(interpret(DetectionPattern::parse("BDDD")) == DetectionOutcome::LeakToSOrHop);
  CHECK(interpret(DetectionPattern::parse("BBBB")) == DetectionOutcome::LeakToSOrHop);
  CHECK(interpret(DetectionPattern::parse("DBDD")) == DetectionOutcome::ZeroF);
  CHECK(interpret(DetectionPattern::parse("DDBD")) == DetectionOutcome::OneF);
  CHECK(interpret(DetectionPattern::parse("DDDB")) == DetectionOutcome::ZeemanLeak);
  CHECK(interpret(DetectionPattern::parse("DDDD")) == DetectionOutcome::ZeemanLeak);
  CHECK(interpret(DetectionPattern::parse("DBBD")) == DetectionOutcome::Discard);

  int bright_first = 0, discard = 0, named = 0;
  for (unsigned c = 0; c < 16; ++c) {
    const auto o = interpret(DetectionPattern::from_code(c));
    if (o == DetectionOutcome::LeakToSOrHop) ++bright_first;
    else if (o == DetectionOutcome::Discard) ++discard;
    else ++named;
  }
  CHECK(bright_first == 8);
  CHECK(named == 4);
  CHECK(discard == 4);
}

TEST_CASE("pattern overrides") {
  PatternTable table;
  table.set(DetectionPattern::parse("DBBD"), DetectionOutcome::ZeroF);
  CHECK(table.interpret(DetectionPattern::parse("DBBD")) == DetectionOutcome::ZeroF);
  CHECK_THROWS_AS(table.set(DetectionPattern::parse("BDDD"), DetectionOutcome::ZeroF), ConfigError);
}

TEST_CASE("default confusion rows") {
  const auto cm = default_confusion();
  CHECK(cm.rows().size() == 6);
  const auto& zero = cm.row(kZeroF);
  CHECK(zero.p_zero == doctest::Approx(0.990).epsilon(1e-12));
  CHECK(zero.p_one == doctest::Approx(0.0005).epsilon(1e-12));
  CHECK(zero.p_zeeman == doctest::Approx(0.0095).epsilon(1e-12));
  const auto& one = cm.row(kOneF);
  CHECK(one.p_zero == doctest::Approx(0.003).epsilon(1e-12));
  CHECK(one.p_one == doctest::Approx(0.934).epsilon(1e-12));
  CHECK(one.p_zeeman == doctest::Approx(0.063).epsilon(1e-12));
  const auto& plus = cm.row(ZeemanLevel{Manifold::F_7half, 3, 1});
  CHECK(plus.p_zero == doctest::Approx(0.002).epsilon(1e-12));
  CHECK(plus.p_one == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(plus.p_zeeman == doctest::Approx(0.997).epsilon(1e-12));
  for (const auto& [level, row] : cm.rows()) {
    CHECK(std::abs(row.p_zero + row.p_one + row.p_zeeman - 1.0) < 1e-9);
  }
}

TEST_CASE("fallback row for uncalibrated leaked levels") {
  const auto cm = default_confusion();
  const ZeemanLevel deep{Manifold::F_7half, 4, -3};
  CHECK_THROWS_AS(cm.row(deep), ConfigError);
  CHECK(&cm.resolve(deep) == &cm.row(ZeemanLevel{Manifold::F_7half, 4, -1}));
  CHECK_THROWS_AS(cm.resolve(kZeroS), ConfigError);
}

TEST_CASE("confusion table parsing") {
  std::istringstream in("# comment\nF7/2:F=3,mF=0 98 1 1\n\nF7/2:F=4,mF=0 0.1 0.8 0.1  # trailing\n");
  const auto cm = ConfusionMatrix::parse(in);
  CHECK(cm.row(kZeroF).p_zero == doctest::Approx(0.98));
  CHECK(cm.row(kOneF).p_one == doctest::Approx(0.8));
  std::stringstream round;
  cm.write(round);
  const auto back = ConfusionMatrix::parse(round);
  CHECK(back.row(kOneF).p_one == cm.row(kOneF).p_one);

  std::istringstream dup("F7/2:F=3,mF=0 1 0 0\nF7/2:F=3,mF=0 1 0 0\n");
  CHECK_THROWS_AS(ConfusionMatrix::parse(dup), ConfigError);
  std::istringstream neg("F7/2:F=3,mF=0 1 -1 0\n");
  CHECK_THROWS_AS(ConfusionMatrix::parse(neg), ConfigError);
  std::istringstream short_row("F7/2:F=3,mF=0 1 0\n");
  CHECK_THROWS_AS(ConfusionMatrix::parse(short_row), ConfigError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(ConfusionMatrix::parse(empty), ConfigError);
}

TEST_CASE("degenerate rows sample deterministically") {
  const auto cm = perfect_confusion();
  CHECK(cm.rows().size() == 16);
  DetectionSampler s(cm, 1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(s.sample(kZeroF) == DetectionOutcome::ZeroF);
    CHECK(s.sample(kOneF) == DetectionOutcome::OneF);
  }
  CHECK_THROWS_AS(s.sample(kZeroS), ConfigError);
}

TEST_CASE("sampler is deterministic in its seed") {
  const auto cm = default_confusion();
  DetectionSampler a(cm, 42), b(cm, 42);
  for (int i = 0; i < 500; ++i) CHECK(a.sample(kOneF) == b.sample(kOneF));
  CHECK(simulate_detection(kOneF, cm, 9) == simulate_detection(kOneF, cm, 9));
}

TEST_CASE("sampled marginals match every row within 3 sigma") {
  const auto cm = default_confusion();
  constexpr int n = 100000;
  std::uint64_t seed = 100;
  for (const auto& [level, row] : cm.rows()) {
    DetectionSampler s(cm, seed++);
    OutcomeCounts counts;
    for (int i = 0; i < n; ++i) counts.add(s.sample(level));
    CHECK(counts.total() == n);
    const double expected[] = {row.p_zero, row.p_one, row.p_zeeman};
    const std::int64_t got[] = {counts.zero_f, counts.one_f, counts.zeeman_leak};
    for (int k = 0; k < 3; ++k) {
      const double sigma = std::sqrt(n * expected[k] * (1.0 - expected[k]));
      CHECK(std::abs(static_cast<double>(got[k]) - n * expected[k]) <= 3.0 * sigma);
    }
  }
}
