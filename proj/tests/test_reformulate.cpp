#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "clarity/reformulate.hpp"

using namespace clarity;

static MCQInstance make_instance(const std::string& id, int m, OptionSet answer,
                                 std::optional<double> pass_rate = std::nullopt) {
  MCQInstance inst;
  inst.id = id;
  inst.stem = "Stem for " + id;
  for (int i = 0; i < m; ++i) {
    const char label = static_cast<char>('A' + i);
    inst.options.push_back({label, id + " option " + std::string(1, label)});
  }
  inst.answer = answer;
  inst.pass_rate = pass_rate;
  return inst;
}

TEST_CASE("deconstruct builds one proposition per option") {
  const auto inst = make_instance("q1", 4, OptionSet::of({'A', 'C'}));
  const auto props = deconstruct(inst);
  REQUIRE(props.size() == 4);
  const bool expected[] = {true, false, true, false};
  for (int i = 0; i < 4; ++i) {
    CHECK(props[i].is_correct == expected[i]);
    CHECK(props[i].source_instance == "q1");
    CHECK(props[i].source_label == static_cast<char>('A' + i));
    CHECK(props[i].statement == inst.stem + " " + inst.options[i].text);
  }

  const auto none = deconstruct(make_instance("q2", 3, OptionSet{}));
  for (const auto& p : none) CHECK_FALSE(p.is_correct);

  CHECK(deconstruct(make_instance("q3", 1, OptionSet::of({'A'}))).size() == 1);
}

TEST_CASE("deconstruct separator is configurable") {
  const auto inst = make_instance("q1", 2, OptionSet{});
  const auto props = deconstruct(inst, "");
  CHECK(props[0].statement == inst.stem + inst.options[0].text);
}

TEST_CASE("polish_pool keeps correctness and falls back per item") {
  auto props = deconstruct(make_instance("q1", 4, OptionSet::of({'B'})));
  const auto more = deconstruct(make_instance("q2", 4, OptionSet::of({'A'})));
  props.insert(props.end(), more.begin(), more.end());
  REQUIRE(props.size() == 8);
  const auto original = props;

  MockJudge echo;
  polish_pool(props, echo);
  for (size_t i = 0; i < props.size(); ++i) {
    CHECK(props[i].polished);
    CHECK(props[i].statement == original[i].statement);  // echo mock = identity
    CHECK(props[i].is_correct == original[i].is_correct);
    CHECK(props[i].source_instance == original[i].source_instance);
  }

  auto props2 = original;
  MockJudge flaky;
  flaky.fail_from_call = 3;
  JudgeEndpointConfig serial;
  serial.max_parallel = 1;  // deterministic call order
  polish_pool(props2, flaky, serial);
  int polished = 0, fallback = 0;
  for (size_t i = 0; i < props2.size(); ++i) {
    if (props2[i].polished) ++polished;
    else {
      ++fallback;
      CHECK(props2[i].statement == original[i].statement);
    }
  }
  CHECK(polished == 3);
  CHECK(fallback == 5);
}

TEST_CASE("rank_and_split selects the easiest alpha fraction") {
  std::vector<MCQInstance> dataset;
  for (int i = 0; i < 10; ++i)
    dataset.push_back(make_instance("q" + std::to_string(i), 4,
                                    OptionSet::of({'A'}), i / 10.0));
  auto [shuffle_set, keep_set] = rank_and_split(dataset, 0.5);
  CHECK(shuffle_set.size() == 5);
  CHECK(keep_set.size() == 5);
  for (const auto& inst : shuffle_set) CHECK(*inst.pass_rate >= 0.5);

  auto [none, all] = rank_and_split(dataset, 0.0);
  CHECK(none.empty());
  CHECK(all.size() == 10);
  auto [everything, rest] = rank_and_split(dataset, 1.0);
  CHECK(everything.size() == 10);
  CHECK(rest.empty());
}

TEST_CASE("rank_and_split reports missing pass rates") {
  std::vector<MCQInstance> dataset{make_instance("ok", 4, OptionSet{}, 0.5),
                                   make_instance("bad", 4, OptionSet{})};
  CHECK_THROWS_WITH_AS(rank_and_split(dataset, 0.5),
                       doctest::Contains("bad"), MissingPassRate);
}

TEST_CASE("rank_and_split tie-break is by id") {
  std::vector<MCQInstance> dataset{make_instance("b", 4, OptionSet{}, 0.5),
                                   make_instance("a", 4, OptionSet{}, 0.5),
                                   make_instance("c", 4, OptionSet{}, 0.1)};
  auto [shuffle_set, keep_set] = rank_and_split(dataset, 1.0);
  CHECK(shuffle_set[0].id == "a");
  CHECK(shuffle_set[1].id == "b");
  CHECK(shuffle_set[2].id == "c");
}

TEST_CASE("measure_pass_rate with scripted policies") {
  const auto inst = make_instance("q1", 4, OptionSet::of({'A', 'C'}));
  MockPolicy always(MockPolicy::Mode::always_correct);
  CHECK(measure_pass_rate(always, inst, 8) == doctest::Approx(1.0));
  MockPolicy never(MockPolicy::Mode::never_correct);
  CHECK(measure_pass_rate(never, inst, 8) == doctest::Approx(0.0));
  MockPolicy alternating(MockPolicy::Mode::alternating);
  CHECK(measure_pass_rate(alternating, inst, 8) == doctest::Approx(0.5));
}

TEST_CASE("group_propositions partitions the pool") {
  ReformConfig config;
  config.group_size = 4;
  std::vector<Proposition> pool;
  for (const auto& inst : {make_instance("q1", 4, OptionSet::of({'A'})),
                           make_instance("q2", 4, OptionSet::of({'B', 'C'}))}) {
    auto p = deconstruct(inst);
    pool.insert(pool.end(), p.begin(), p.end());
  }
  Rng rng(42);
  const auto grouped = group_propositions(pool, config, rng);
  REQUIRE(grouped.size() == 2);
  std::set<std::string> seen;
  for (const auto& inst : grouped) {
    CHECK(inst.origin == Origin::reformulated);
    CHECK(validate_instance(inst).empty());
    for (const auto& sid : inst.source_ids) CHECK(seen.insert(sid).second);
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("group answer follows draw-order correctness") {
  ReformConfig config;
  config.group_size = 4;
  config.templates = {{"Which are correct?", false}};
  std::vector<Proposition> pool(4);
  for (int i = 0; i < 4; ++i) {
    pool[i].id = "p" + std::to_string(i);
    pool[i].statement = "s" + std::to_string(i);
    pool[i].is_correct = i % 2 == 0;  // [T,F,T,F]
  }
  Rng rng(1);
  const auto grouped = group_propositions(pool, config, rng);
  REQUIRE(grouped.size() == 1);
  // Labels follow draw positions; answer = labels of correct propositions.
  OptionSet expected;
  for (size_t i = 0; i < grouped[0].source_ids.size(); ++i) {
    const int src = grouped[0].source_ids[i][1] - '0';
    if (src % 2 == 0) expected.insert(static_cast<char>('A' + i));
  }
  CHECK(grouped[0].answer == expected);
}

TEST_CASE("wrong-polarity templates invert the answer") {
  ReformConfig config;
  config.group_size = 2;
  config.templates = {{"Which are wrong?", true}};
  std::vector<Proposition> pool(2);
  pool[0] = {"p0", "s0", true, "q", 'A', false};
  pool[1] = {"p1", "s1", false, "q", 'B', false};
  Rng rng(5);
  const auto grouped = group_propositions(pool, config, rng);
  REQUIRE(grouped.size() == 1);
  // Exactly the incorrect proposition is selected, wherever it landed.
  CHECK(grouped[0].answer.size() == 1);
  for (size_t i = 0; i < grouped[0].source_ids.size(); ++i) {
    const bool was_correct = grouped[0].source_ids[i] == "p0";
    const char label = static_cast<char>('A' + i);
    CHECK(grouped[0].answer.contains(label) == !was_correct);
  }
}

TEST_CASE("remainder policies") {
  ReformConfig config;
  config.group_size = 4;
  std::vector<Proposition> pool(10);
  for (int i = 0; i < 10; ++i)
    pool[i] = {"p" + std::to_string(i), "s", i % 2 == 0, "q", 'A', false};

  Rng rng_drop(9);
  CHECK(group_propositions(pool, config, rng_drop).size() == 2);

  config.remainder = RemainderPolicy::short_group;
  Rng rng_short(9);
  const auto grouped = group_propositions(pool, config, rng_short);
  REQUIRE(grouped.size() == 3);
  CHECK(grouped.back().option_count() == 2);

  Rng rng_empty(1);
  CHECK(group_propositions({}, config, rng_empty).empty());
}

TEST_CASE("reformulate_step schedule and conservation") {
  std::vector<MCQInstance> dataset;
  for (int i = 0; i < 10; ++i)
    dataset.push_back(make_instance("q" + std::to_string(i), 4,
                                    OptionSet::of({'A'}), i / 10.0));
  ReformConfig config;
  config.seed = 77;

  const auto before = reformulate_step(99, dataset, nullptr, config);
  REQUIRE(before.size() == dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) CHECK(before[i].id == dataset[i].id);

  const auto after = reformulate_step(100, dataset, nullptr, config);
  CHECK(after.size() == 10);  // 5 kept + 20 propositions / 4
  int reformulated = 0;
  for (const auto& inst : after)
    if (inst.origin == Origin::reformulated) ++reformulated;
  CHECK(reformulated == 5);

  const auto again = reformulate_step(100, dataset, nullptr, config);
  REQUIRE(again.size() == after.size());
  for (size_t i = 0; i < after.size(); ++i) {
    CHECK(again[i].id == after[i].id);
    CHECK(again[i].answer == after[i].answer);
    CHECK(again[i].stem == after[i].stem);
  }
}

TEST_CASE("reformulated answers preserve source correctness labels") {
  std::vector<MCQInstance> dataset;
  Rng seed_rng(123);
  for (int i = 0; i < 12; ++i) {
    OptionSet answer;
    answer.bits = static_cast<uint32_t>(seed_rng.next()) & 0xF;
    dataset.push_back(make_instance("q" + std::to_string(i), 4, answer,
                                    seed_rng.uniform01()));
  }
  ReformConfig config;
  config.seed = 5;
  config.templates = {{"Which of the following statements are correct?", false}};
  std::map<std::string, bool> truth;
  for (const auto& inst : dataset)
    for (const auto& p : deconstruct(inst)) truth[p.id] = p.is_correct;

  const auto after = reformulate_step(100, dataset, nullptr, config);
  for (const auto& inst : after) {
    if (inst.origin != Origin::reformulated) continue;
    for (size_t i = 0; i < inst.source_ids.size(); ++i) {
      const char label = static_cast<char>('A' + i);
      CHECK(inst.answer.contains(label) == truth.at(inst.source_ids[i]));
    }
  }
}

TEST_CASE("alpha schedule picks the latest point at or before the step") {
  ReformConfig config;
  config.alpha_schedule = {{100, 0.5}, {200, 0.7}};
  CHECK(config.alpha_at(100) == doctest::Approx(0.5));
  CHECK(config.alpha_at(199) == doctest::Approx(0.5));
  CHECK(config.alpha_at(200) == doctest::Approx(0.7));
}
