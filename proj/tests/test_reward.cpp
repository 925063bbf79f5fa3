#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "clarity/reward.hpp"
#include "clarity/rng.hpp"

using namespace clarity;

static MCQInstance four_option_instance() {
  MCQInstance inst;
  inst.id = "q1";
  inst.stem = "stem";
  inst.options = {{'A', "one"}, {'B', "two"}, {'C', "three"}, {'D', "four"}};
  inst.answer = OptionSet::of({'A', 'C'});
  return inst;
}

TEST_CASE("format_reward needs both tags") {
  CHECK(format_reward(parse_response("<think>t</think><answer>{A}</answer>", 4)));
  CHECK_FALSE(format_reward(parse_response("<think>t</think>", 4)));
  CHECK(format_reward(parse_response("<answer>{A}</answer><think>t</think>", 4)));
}

TEST_CASE("structure_reward requires every option letter") {
  CHECK(structure_reward("A: ok, B: no, C: yes, D: maybe", 4));
  CHECK_FALSE(structure_reward("only A and B considered", 4));
  CHECK_FALSE(structure_reward("", 1));
}

TEST_CASE("answer_reward is strict set equality") {
  const OptionSet gold = OptionSet::of({'A', 'C'});
  CHECK(answer_reward(OptionSet::of({'A', 'C'}), gold));
  CHECK_FALSE(answer_reward(OptionSet::of({'A'}), gold));
  CHECK(answer_reward(OptionSet{}, OptionSet{}));
}

TEST_CASE("answer_reward truth table is the diagonal") {
  int trues = 0;
  for (uint32_t p = 0; p < 16; ++p)
    for (uint32_t g = 0; g < 16; ++g)
      if (answer_reward(OptionSet{p}, OptionSet{g})) {
        ++trues;
        CHECK(p == g);
      }
  CHECK(trues == 16);
}

TEST_CASE("consistency_reward") {
  CHECK(consistency_reward(OptionSet::of({'A', 'C'}), OptionSet::of({'A', 'C'})));
  CHECK_FALSE(consistency_reward(OptionSet::of({'B', 'D'}), OptionSet::of({'A', 'C'})));
  CHECK_FALSE(consistency_reward(std::nullopt, OptionSet::of({'A'})));
}

TEST_CASE("total_reward composes the shipped weight tables") {
  const StageConfig s2 = StageConfig::stage2_default();
  RewardBreakdown b;
  b.format_ok = true;
  b.consistency_ok = true;
  b.answer_ok = true;
  CHECK(total_reward(b, s2) == doctest::Approx(1.0));
  b.format_ok = false;
  b.consistency_ok = false;
  b.answer_ok = false;
  CHECK(total_reward(b, s2) == doctest::Approx(-1.1));

  const StageConfig s1 = StageConfig::stage1_default();
  RewardBreakdown b1;
  b1.format_ok = true;
  b1.structure_ok = false;
  CHECK(total_reward(b1, s1) == doctest::Approx(1.0));
  b1.structure_ok = true;
  CHECK(total_reward(b1, s1) == doctest::Approx(2.0));
}

TEST_CASE("total_reward rejects missing predicates") {
  RewardBreakdown b;
  b.format_ok = true;
  CHECK_THROWS_AS(total_reward(b, StageConfig::stage2_default()), ConfigError);
}

TEST_CASE("stage2 monotonicity in each predicate") {
  const StageConfig s2 = StageConfig::stage2_default();
  for (int mask = 0; mask < 8; ++mask) {
    RewardBreakdown b;
    b.format_ok = mask & 1;
    b.consistency_ok = static_cast<bool>(mask & 2);
    b.answer_ok = static_cast<bool>(mask & 4);
    const double base = total_reward(b, s2);
    for (int bit = 0; bit < 3; ++bit) {
      if (mask & (1 << bit)) continue;
      RewardBreakdown up = b;
      if (bit == 0) up.format_ok = true;
      if (bit == 1) up.consistency_ok = true;
      if (bit == 2) up.answer_ok = true;
      CHECK(total_reward(up, s2) >= base);
    }
  }
}

TEST_CASE("total_reward is bit-reproducible") {
  const StageConfig s2 = StageConfig::stage2_default();
  RewardBreakdown b;
  b.format_ok = false;
  b.consistency_ok = false;
  b.answer_ok = true;
  const double first = total_reward(b, s2);
  for (int i = 0; i < 100; ++i) {
    const double again = total_reward(b, s2);
    CHECK(std::memcmp(&first, &again, sizeof first) == 0);
  }
}

TEST_CASE("group_advantages basics") {
  CHECK(group_advantages({1, 1, 1}) == std::vector<double>{0, 0, 0});
  const auto a = group_advantages({0, 1});
  CHECK(a[0] == doctest::Approx(-1.0));
  CHECK(a[1] == doctest::Approx(1.0));
}

TEST_CASE("group_advantages against brute-force oracle, G=6") {
  const std::vector<double> rewards{0, 0, 1, 1, 1, 1};
  const double mean = 2.0 / 3.0;
  const double sd = std::sqrt(2.0 / 9.0);
  const auto a = group_advantages(rewards);
  for (size_t i = 0; i < rewards.size(); ++i)
    CHECK(a[i] == doctest::Approx((rewards[i] - mean) / sd).epsilon(1e-12));
}

TEST_CASE("property: advantages have zero mean and unit population std") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 1 + rng.below(16);
    std::vector<double> rewards(n);
    for (auto& r : rewards) r = rng.uniform01() * 4.0 - 2.0;
    const auto a = group_advantages(rewards);
    double mean = 0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean) < 1e-12);
    double var = 0;
    for (double v : a) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    bool degenerate = true;
    for (double r : rewards)
      if (r != rewards[0]) degenerate = false;
    if (!degenerate) CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("score_rollout stage examples") {
  const auto inst = four_option_instance();
  const std::string good =
      "<think>A: right. B: wrong. C: right. D: wrong.</think><answer>{AC}</answer>";

  const auto s1 = score_rollout(inst, good, std::nullopt, StageConfig::stage1_default());
  CHECK(s1.total == doctest::Approx(2.0));

  const auto s2 = score_rollout(inst, good, OptionSet::of({'A', 'C'}),
                                StageConfig::stage2_default());
  CHECK(s2.total == doctest::Approx(1.0));

  const auto bad = score_rollout(inst, "<think>A: no. B: no. C: no. D: no.</think><answer>{B}</answer>",
                                 std::nullopt, StageConfig::stage2_default());
  CHECK(*bad.consistency_ok == false);
  CHECK(bad.total <= 0.0);
}

TEST_CASE("stage1 ignores believed entirely") {
  const auto inst = four_option_instance();
  const std::string raw =
      "<think>A: x B: x C: x D: x</think><answer>{AC}</answer>";
  const auto none = score_rollout(inst, raw, std::nullopt, StageConfig::stage1_default());
  const auto some = score_rollout(inst, raw, OptionSet::of({'B'}),
                                  StageConfig::stage1_default());
  CHECK(none.total == some.total);
  CHECK(none.format_ok == some.format_ok);
  CHECK(none.structure_ok == some.structure_ok);
  CHECK_FALSE(none.consistency_ok.has_value());
}

TEST_CASE("stage config JSON round trip and defaults") {
  const auto j = to_json(StageConfig::stage2_default());
  const auto restored = stage_config_from_json(j);
  CHECK(restored.stage == Stage::Stage2);
  CHECK(restored.format.weight == doctest::Approx(0.1));
  CHECK(restored.consistency->value_false == doctest::Approx(-1.0));
  CHECK(restored.answer->value_true == doctest::Approx(1.0));

  const auto vanilla = stage_config_from_json({{"stage", "vanilla"}});
  CHECK(vanilla.answer.has_value());
  CHECK_FALSE(vanilla.consistency.has_value());
  CHECK_THROWS_AS(stage_config_from_json({{"stage", "stage9"}}), ConfigError);
}
