#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "clarity/analysis.hpp"
#include "clarity/rng.hpp"

using namespace clarity;

TEST_CASE("classify_inconsistency taxonomy examples") {
  CHECK(classify_inconsistency(OptionSet{}, OptionSet::of({'A'})) ==
        InconsistencyLabel::OverExclusion);
  CHECK(classify_inconsistency(OptionSet::of({'A', 'B', 'C'}), OptionSet::of({'A'})) ==
        InconsistencyLabel::OverSelection);
  CHECK(classify_inconsistency(OptionSet::of({'B'}), OptionSet::of({'C'})) ==
        InconsistencyLabel::DissociatedAnswer);
  CHECK(classify_inconsistency(std::nullopt, OptionSet::of({'A'})) ==
        InconsistencyLabel::Unjudgeable);
  CHECK(classify_inconsistency(OptionSet::of({'A'}), OptionSet::of({'A'})) ==
        InconsistencyLabel::Consistent);
}

TEST_CASE("taxonomy is total and disjoint over M=4") {
  int consistent = 0;
  for (int b = -1; b < 16; ++b) {
    for (uint32_t p = 0; p < 16; ++p) {
      std::optional<OptionSet> believed;
      if (b >= 0) believed = OptionSet{static_cast<uint32_t>(b)};
      const auto label = classify_inconsistency(believed, OptionSet{p});
      // Exactly one label by construction of the enum; check the
      // equality <-> Consistent correspondence.
      const bool equal = believed && believed->bits == p;
      CHECK((label == InconsistencyLabel::Consistent) == equal);
      if (equal) ++consistent;
      if (!believed) CHECK(label == InconsistencyLabel::Unjudgeable);
    }
  }
  CHECK(consistent == 16);
}

TEST_CASE("classify_pattern matches structure_reward everywhere") {
  Rng rng(31);
  const char* samples[] = {
      "A: yes B: no C: maybe D: no", "overall it is clear",
      "A and B only", "", "A: x. B: y. C: z.", "the answer follows directly"};
  for (const char* s : samples)
    for (int m = 1; m <= 5; ++m)
      CHECK((classify_pattern(s, m) == PatternLabel::Explicit) ==
            structure_reward(s, m));
  // Random strings keep the definitional tie.
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    for (int i = 0; i < 20; ++i)
      s.push_back(static_cast<char>(32 + rng.below(95)));
    const int m = 1 + static_cast<int>(rng.below(6));
    CHECK((classify_pattern(s, m) == PatternLabel::Explicit) ==
          structure_reward(s, m));
  }
}

TEST_CASE("metrics from published confusion counts") {
  const auto standard = metrics_from_confusion({951, 285, 513, 365});
  CHECK(standard.acc * 100 == doctest::Approx(58.5).epsilon(0.001));
  CHECK(standard.acc_plus * 100 == doctest::Approx(45.0).epsilon(0.001));
  CHECK(standard.cons_rate * 100 == doctest::Approx(69.3).epsilon(0.001));

  const auto improved = metrics_from_confusion({1150, 42, 840, 82});
  CHECK(improved.acc * 100 == doctest::Approx(56.4).epsilon(0.001));
  CHECK(improved.acc_plus * 100 == doctest::Approx(54.4).epsilon(0.001));
  CHECK(improved.cons_rate * 100 == doctest::Approx(94.1).epsilon(0.001));
}

static EvalRecord record(OptionSet gold, OptionSet predicted,
                         std::optional<OptionSet> believed) {
  EvalRecord r;
  r.gold = gold;
  r.predicted = predicted;
  r.believed = believed;
  return r;
}

TEST_CASE("compute_metrics tallies records") {
  const OptionSet ac = OptionSet::of({'A', 'C'});
  std::vector<EvalRecord> records{
      record(ac, ac, ac),                          // correct + consistent
      record(ac, ac, OptionSet::of({'B'})),        // correct + inconsistent
      record(ac, OptionSet::of({'B'}), OptionSet::of({'B'})),  // incorrect + consistent
      record(ac, OptionSet::of({'B'}), std::nullopt),          // unjudgeable
  };
  const auto m = compute_metrics(records);
  CHECK(m.acc == doctest::Approx(0.5));
  CHECK(m.cons_rate == doctest::Approx(0.5));
  CHECK(m.acc_plus == doctest::Approx(0.25));
  CHECK(m.confusion.incorrect_inconsistent == 1);

  CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);

  std::vector<EvalRecord> perfect{record(ac, ac, ac), record(ac, ac, ac)};
  const auto p = compute_metrics(perfect);
  CHECK(p.acc == 1.0);
  CHECK(p.cons_rate == 1.0);
  CHECK(p.acc_plus == 1.0);
}

TEST_CASE("property: acc_plus bounded by acc and cons_rate") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EvalRecord> records;
    const size_t n = 1 + rng.below(40);
    for (size_t i = 0; i < n; ++i) {
      OptionSet gold{static_cast<uint32_t>(rng.below(16))};
      OptionSet predicted{static_cast<uint32_t>(rng.below(16))};
      std::optional<OptionSet> believed;
      if (rng.below(5) != 0)
        believed = OptionSet{static_cast<uint32_t>(rng.below(16))};
      records.push_back(record(gold, predicted, believed));
    }
    const auto m = compute_metrics(records);
    CHECK(m.acc_plus <= std::min(m.acc, m.cons_rate) + 1e-12);

    // Permutation invariance.
    std::vector<EvalRecord> shuffled = records;
    rng.shuffle(shuffled);
    const auto m2 = compute_metrics(shuffled);
    CHECK(m2.acc == m.acc);
    CHECK(m2.cons_rate == m.cons_rate);
    CHECK(m2.acc_plus == m.acc_plus);
  }
}

TEST_CASE("dynamics_report") {
  const OptionSet a = OptionSet::of({'A'});
  LabeledRecord consistent;
  consistent.record = record(a, a, a);
  consistent.pattern = PatternLabel::Explicit;

  std::vector<std::pair<int, std::vector<LabeledRecord>>> batches{
      {10, {consistent}}, {20, {consistent, consistent}}};
  const auto rows = dynamics_report(batches);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].step == 10);
  CHECK(rows[1].step == 20);
  CHECK(rows[0].cons_rate == 1.0);
  CHECK(rows[0].explicit_count + rows[0].as_a_whole_count == 1);

  CHECK(dynamics_report({}).empty());

  std::vector<std::pair<int, std::vector<LabeledRecord>>> bad{
      {20, {consistent}}, {10, {consistent}}};
  CHECK_THROWS_AS(dynamics_report(bad), std::invalid_argument);
}

TEST_CASE("dynamics CSV has the documented header") {
  DynamicsRow row;
  row.step = 3;
  const std::string csv = dynamics_csv({row});
  CHECK(csv.find("step,acc,cons_rate,acc_plus,over_exclusion,over_selection,"
                 "dissociated,unjudgeable,explicit,as_a_whole,mean_len") == 0);
  CHECK(csv.find("\n3,") != std::string::npos);
}
