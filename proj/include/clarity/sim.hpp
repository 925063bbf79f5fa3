#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "clarity/analysis.hpp"
#include "clarity/judge.hpp"
#include "clarity/mcq.hpp"
#include "clarity/reward.hpp"
#include "clarity/rng.hpp"

namespace clarity {

enum class Archetype {
  consistent_correct,
  consistent_wrong,
  inconsistent_correct,
  inconsistent_wrong,
  untagged,
};

struct CandidateResponse {
  std::string text;
  std::optional<OptionSet> believed_hint;  // consumed by the mock judge
  Archetype archetype = Archetype::consistent_correct;
  double init_logit = 0.0;
};

struct CandidatePool {
  std::vector<CandidateResponse> candidates;
};

struct Scenario {
  std::vector<MCQInstance> dataset;
  std::vector<CandidatePool> pools;  // parallel to dataset
};

struct SimConfig {
  int rollouts_per_step = 6;
  double learning_rate = 0.5;
  // Step counts default to the 2-epoch / 8-epoch stage proportion.
  int stage1_steps = 40;
  int stage2_steps = 160;
  uint64_t seed = 0;
  StageConfig stage1 = StageConfig::stage1_default();
  StageConfig stage2 = StageConfig::stage2_default();

  static SimConfig vanilla(int steps = 200) {
    SimConfig c;
    c.stage1_steps = 0;
    c.stage2_steps = steps;
    c.stage2 = StageConfig::vanilla_default();
    return c;
  }
};

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  if (j.contains("rollouts_per_step")) c.rollouts_per_step = j["rollouts_per_step"];
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"];
  if (j.contains("stage1_steps")) c.stage1_steps = j["stage1_steps"];
  if (j.contains("stage2_steps")) c.stage2_steps = j["stage2_steps"];
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("stage1")) c.stage1 = stage_config_from_json(j["stage1"]);
  if (j.contains("stage2")) c.stage2 = stage_config_from_json(j["stage2"]);
  if (c.rollouts_per_step < 1) throw ConfigError("rollouts_per_step must be >= 1");
  return c;
}

struct SimPolicy {
  // One logit vector per instance, over that instance's candidate pool.
  std::vector<std::vector<double>> logits;

  static SimPolicy init_from(const Scenario& scenario) {
    SimPolicy p;
    for (const auto& pool : scenario.pools) {
      std::vector<double> row;
      row.reserve(pool.candidates.size());
      for (const auto& c : pool.candidates) row.push_back(c.init_logit);
      p.logits.push_back(std::move(row));
    }
    return p;
  }
};

inline std::vector<double> softmax(const std::vector<double>& logits) {
  double max = logits.front();
  for (double v : logits) max = std::max(max, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

// Builds a tagged candidate response. Itemized thinking names every option
// letter; holistic thinking names none. A [[BELIEVED:..]] sentinel encodes
// the believed set for the mock judge; omitted when the hint is unparseable.
inline std::string make_candidate_text(OptionSet final_answer,
                                       const std::optional<OptionSet>& believed,
                                       bool itemized, int option_count,
                                       bool tagged = true) {
  std::ostringstream thinking;
  if (itemized) {
    for (int i = 0; i < option_count; ++i) {
      const char letter = static_cast<char>('A' + i);
      thinking << letter << ": weighed against the stem in detail. ";
    }
  } else {
    thinking << "taken as a whole the best choice is obvious. ";
  }
  if (believed) thinking << "[[BELIEVED:" << believed->letters() << "]]";
  if (!tagged) return thinking.str() + " answer " + final_answer.braced();
  return "<think>" + thinking.str() + "</think><answer>" +
         final_answer.braced() + "</answer>";
}

struct SimResult {
  std::vector<DynamicsRow> rows;
  SimPolicy final_policy;
};

namespace detail {

struct CandidateFacts {
  OptionSet predicted;
  bool correct = false;
  bool consistent = false;
  bool explicit_pattern = false;
  size_t thinking_len = 0;
  std::string thinking;
};

inline CandidateFacts candidate_facts(const MCQInstance& inst,
                                      const CandidateResponse& cand) {
  const int m = inst.option_count();
  const ParsedResponse parsed = parse_response(cand.text, m);
  CandidateFacts f;
  f.predicted = parsed.final_answer;
  f.correct = parsed.final_answer == inst.answer;
  f.consistent = cand.believed_hint && *cand.believed_hint == parsed.final_answer;
  f.explicit_pattern = classify_pattern(parsed.thinking, m) == PatternLabel::Explicit;
  f.thinking_len = parsed.thinking.size();
  f.thinking = parsed.thinking;
  return f;
}

}  // namespace detail

// Categorical-policy training loop: per step and instance, draw G candidates
// from softmax(logits), score them under the active stage, normalize to
// group advantages, and ascend each drawn candidate's logit by the mean
// advantage of its draws. The clipped policy-gradient surrogate used for
// real LLM training is deliberately not modeled; this update preserves the
// ordering structure of group advantages, which is what the directional
// dynamics need.
inline SimResult run_sim(const SimConfig& config, const Scenario& scenario,
                         ChatClient* judge = nullptr) {
  if (scenario.dataset.size() != scenario.pools.size())
    throw ConfigError("scenario dataset/pools size mismatch");
  for (const auto& pool : scenario.pools)
    if (pool.candidates.empty()) throw ConfigError("empty candidate pool");

  // Static per-candidate facts.
  std::vector<std::vector<detail::CandidateFacts>> facts;
  for (size_t i = 0; i < scenario.dataset.size(); ++i) {
    std::vector<detail::CandidateFacts> row;
    for (const auto& c : scenario.pools[i].candidates)
      row.push_back(detail::candidate_facts(scenario.dataset[i], c));
    facts.push_back(std::move(row));
  }

  SimPolicy policy = SimPolicy::init_from(scenario);
  Rng rng(config.seed);
  SimResult result;
  const int total_steps = config.stage1_steps + config.stage2_steps;
  const int g = config.rollouts_per_step;

  for (int step = 0; step < total_steps; ++step) {
    const bool in_stage1 = step < config.stage1_steps;
    const StageConfig& stage = in_stage1 ? config.stage1 : config.stage2;
    std::vector<LabeledRecord> batch;
    double exp_acc = 0.0, exp_cons = 0.0, exp_explicit = 0.0;

    for (size_t i = 0; i < scenario.dataset.size(); ++i) {
      const MCQInstance& inst = scenario.dataset[i];
      const auto& pool = scenario.pools[i].candidates;
      const auto probs = softmax(policy.logits[i]);

      for (size_t c = 0; c < pool.size(); ++c) {
        exp_acc += probs[c] * (facts[i][c].correct ? 1.0 : 0.0);
        exp_cons += probs[c] * (facts[i][c].consistent ? 1.0 : 0.0);
        exp_explicit += probs[c] * (facts[i][c].explicit_pattern ? 1.0 : 0.0);
      }

      std::vector<size_t> draws(g);
      std::vector<double> rewards(g);
      for (int d = 0; d < g; ++d) {
        const size_t c = sample_categorical(probs, rng);
        draws[d] = c;
        std::optional<OptionSet> believed;
        if (stage.consistency) {
          // Stage2 reward path consults the judge; Stage1/Vanilla never do.
          if (judge) {
            believed =
                judge_consistency(*judge, inst, facts[i][c].thinking).believed;
          } else {
            believed = pool[c].believed_hint;
          }
        }
        rewards[d] = score_rollout(inst, pool[c].text, believed, stage).total;

        LabeledRecord lr;
        lr.record.instance_id = inst.id;
        lr.record.gold = inst.answer;
        lr.record.predicted = facts[i][c].predicted;
        lr.record.believed = pool[c].believed_hint;
        lr.record.response_length = facts[i][c].thinking_len;
        lr.pattern = facts[i][c].explicit_pattern ? PatternLabel::Explicit
                                                  : PatternLabel::AsAWhole;
        batch.push_back(std::move(lr));
      }

      const auto advantages = group_advantages(rewards);
      std::map<size_t, std::pair<double, int>> per_candidate;
      for (int d = 0; d < g; ++d) {
        auto& agg = per_candidate[draws[d]];
        agg.first += advantages[d];
        agg.second += 1;
      }
      for (const auto& [c, agg] : per_candidate)
        policy.logits[i][c] += config.learning_rate * (agg.first / agg.second);
    }

    DynamicsRow row = summarize_batch(step, batch);
    const double n = static_cast<double>(scenario.dataset.size());
    row.expected_acc = exp_acc / n;
    row.expected_cons = exp_cons / n;
    row.expected_explicit = exp_explicit / n;
    result.rows.push_back(row);
  }
  result.final_policy = std::move(policy);
  return result;
}

// --- Preset scenarios -----------------------------------------------------

namespace detail {

inline MCQInstance make_instance(const std::string& id, OptionSet gold,
                                 int option_count = 4) {
  MCQInstance inst;
  inst.id = id;
  inst.stem = "Which of the following statements are correct?";
  for (int i = 0; i < option_count; ++i) {
    const char label = static_cast<char>('A' + i);
    inst.options.push_back(
        {label, "synthetic statement " + std::to_string(i + 1)});
  }
  inst.answer = gold;
  return inst;
}

inline OptionSet wrong_set(OptionSet gold, int option_count) {
  OptionSet w = gold;
  w.bits ^= 0b11;  // flip A and B membership
  w.bits &= (1u << option_count) - 1;
  if (w == gold) w.bits ^= 1u;
  return w;
}

}  // namespace detail

// `pilot`: answer-only reward cannot separate consistent from inconsistent
// correct responses, and the inconsistent one starts ahead; the two-stage
// consistency reward uniquely favors the consistent one.
inline Scenario pilot_scenario() {
  Scenario s;
  const OptionSet golds[] = {OptionSet::of({'A', 'C'}), OptionSet::of({'B'}),
                             OptionSet::of({'B', 'D'}), OptionSet::of({'D'}),
                             OptionSet::of({'A'}), OptionSet::of({'C', 'D'})};
  for (int i = 0; i < 12; ++i) {
    const OptionSet gold = golds[i % 6];
    const int m = 4;
    s.dataset.push_back(detail::make_instance("pilot-" + std::to_string(i), gold, m));
    const OptionSet wrong = detail::wrong_set(gold, m);
    CandidatePool pool;
    pool.candidates.push_back(
        {make_candidate_text(wrong, wrong, true, m), wrong,
         Archetype::consistent_wrong, 2.0});
    pool.candidates.push_back(
        {make_candidate_text(gold, wrong, true, m), wrong,
         Archetype::inconsistent_correct, 0.5});
    pool.candidates.push_back(
        {make_candidate_text(gold, gold, true, m), gold,
         Archetype::consistent_correct, 0.0});
    pool.candidates.push_back(
        {make_candidate_text(wrong, std::nullopt, true, m), std::nullopt,
         Archetype::inconsistent_wrong, -1.0});
    s.pools.push_back(std::move(pool));
  }
  return s;
}

// `clarity`: holistic responses dominate initially; Stage1 structure reward
// pushes toward itemized reasoning, Stage2 toward the consistent-correct
// candidate.
inline Scenario clarity_scenario() {
  Scenario s;
  const OptionSet golds[] = {OptionSet::of({'A', 'C'}), OptionSet::of({'B'}),
                             OptionSet::of({'C'}), OptionSet::of({'A', 'D'})};
  for (int i = 0; i < 12; ++i) {
    const OptionSet gold = golds[i % 4];
    const int m = 4;
    s.dataset.push_back(
        detail::make_instance("clarity-" + std::to_string(i), gold, m));
    const OptionSet wrong = detail::wrong_set(gold, m);
    CandidatePool pool;
    pool.candidates.push_back(
        {make_candidate_text(gold, gold, true, m), gold,
         Archetype::consistent_correct, 0.0});
    pool.candidates.push_back(
        {make_candidate_text(gold, wrong, true, m), wrong,
         Archetype::inconsistent_correct, 0.3});
    pool.candidates.push_back(
        {make_candidate_text(gold, std::nullopt, false, m), std::nullopt,
         Archetype::inconsistent_correct, 1.5});
    pool.candidates.push_back(
        {make_candidate_text(wrong, std::nullopt, false, m), std::nullopt,
         Archetype::inconsistent_wrong, 0.5});
    s.pools.push_back(std::move(pool));
  }
  return s;
}

// `hacking`: a weak judge confirms whatever the short holistic response
// answers (believed_hint equals the final answer), so Stage2 alone cannot
// penalize it and the over-simplified candidate keeps its lead.
inline Scenario hacking_scenario() {
  Scenario s;
  const OptionSet golds[] = {OptionSet::of({'B', 'C'}), OptionSet::of({'A'}),
                             OptionSet::of({'D'})};
  for (int i = 0; i < 9; ++i) {
    const OptionSet gold = golds[i % 3];
    const int m = 4;
    s.dataset.push_back(
        detail::make_instance("hacking-" + std::to_string(i), gold, m));
    CandidatePool pool;
    pool.candidates.push_back(
        {make_candidate_text(gold, gold, true, m), gold,
         Archetype::consistent_correct, 0.0});
    pool.candidates.push_back(
        {make_candidate_text(gold, gold, false, m), gold,
         Archetype::consistent_correct, 1.0});
    s.pools.push_back(std::move(pool));
  }
  return s;
}

inline std::map<std::string, Scenario> preset_scenarios() {
  return {{"pilot", pilot_scenario()},
          {"clarity", clarity_scenario()},
          {"hacking", hacking_scenario()}};
}

}  // namespace clarity
