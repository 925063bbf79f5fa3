#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "clarity/judge.hpp"
#include "clarity/mcq.hpp"
#include "clarity/reward.hpp"
#include "clarity/rng.hpp"

namespace clarity {

struct StemTemplate {
  std::string text;
  // Templates asking for the *wrong* statements invert the answer set.
  bool wrong_polarity = false;
};

inline std::vector<StemTemplate> default_templates() {
  return {{"Which of the following statements are correct?", false},
          {"Which of the following statements are wrong?", true}};
}

struct AlphaPoint {
  int step;
  double alpha;
};

enum class RemainderPolicy { drop, short_group };

struct ReformConfig {
  // Effective alpha at step s is the alpha of the largest schedule point
  // with point.step <= s. The default single point covers the fixed
  // alpha=0.5-at-step-100 setting.
  std::vector<AlphaPoint> alpha_schedule{{100, 0.5}};
  int trigger_step = 100;
  int group_size = 4;
  std::vector<StemTemplate> templates = default_templates();
  uint64_t seed = 0;
  RemainderPolicy remainder = RemainderPolicy::drop;
  std::string separator = " ";
  Domain domain = Domain::generic;

  double alpha_at(int step) const {
    double alpha = alpha_schedule.empty() ? 0.5 : alpha_schedule.front().alpha;
    for (const auto& p : alpha_schedule)
      if (p.step <= step) alpha = p.alpha;
    return alpha;
  }
};

inline std::vector<Proposition> deconstruct(const MCQInstance& instance,
                                            const std::string& separator = " ") {
  std::vector<Proposition> out;
  out.reserve(instance.options.size());
  for (const auto& opt : instance.options) {
    Proposition p;
    p.id = instance.id + "#" + std::string(1, opt.label);
    p.statement = instance.stem + separator + opt.text;
    p.is_correct = instance.answer.contains(opt.label);
    p.source_instance = instance.id;
    p.source_label = opt.label;
    out.push_back(std::move(p));
  }
  return out;
}

// Rewrites statements in place; correctness and provenance never change.
// Per-item judge failures fall back to the unpolished text.
inline void polish_pool(std::vector<Proposition>& pool, ChatClient& client,
                        const JudgeEndpointConfig& config = {}) {
  std::string tpl;
  if (!config.polish_template_path.empty())
    tpl = load_template_file(config.polish_template_path);
  std::vector<size_t> idx(pool.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto polished = parallel_map<size_t, std::pair<std::string, bool>>(
      idx,
      [&](const size_t& i) {
        return polish_proposition(client, pool[i].statement, config.domain,
                                  config.prompt_lang, tpl);
      },
      config.max_parallel);
  for (size_t i = 0; i < pool.size(); ++i) {
    pool[i].statement = std::move(polished[i].first);
    pool[i].polished = polished[i].second;
  }
}

struct MissingPassRate : std::runtime_error {
  explicit MissingPassRate(const std::vector<std::string>& ids)
      : std::runtime_error("instances missing pass_rate: " + join(ids)) {}
  static std::string join(const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) {
      if (!s.empty()) s += ", ";
      s += id;
    }
    return s;
  }
};

// Descending pass-rate sort (ties by id ascending); the first floor(alpha*N)
// instances form the shuffle set.
inline std::pair<std::vector<MCQInstance>, std::vector<MCQInstance>>
rank_and_split(std::vector<MCQInstance> dataset, double alpha) {
  std::vector<std::string> missing;
  for (const auto& inst : dataset)
    if (!inst.pass_rate) missing.push_back(inst.id);
  if (!missing.empty()) throw MissingPassRate(missing);
  std::stable_sort(dataset.begin(), dataset.end(),
                   [](const MCQInstance& a, const MCQInstance& b) {
                     if (*a.pass_rate != *b.pass_rate)
                       return *a.pass_rate > *b.pass_rate;
                     return a.id < b.id;
                   });
  const size_t cut = static_cast<size_t>(alpha * static_cast<double>(dataset.size()));
  std::vector<MCQInstance> shuffle_set(dataset.begin(), dataset.begin() + cut);
  std::vector<MCQInstance> keep_set(dataset.begin() + cut, dataset.end());
  return {std::move(shuffle_set), std::move(keep_set)};
}

// Policy under evaluation: produces one tagged response per call.
class PolicyClient {
 public:
  virtual ~PolicyClient() = default;
  virtual std::string generate(const MCQInstance& instance, int draw_index) = 0;
};

class MockPolicy : public PolicyClient {
 public:
  enum class Mode { always_correct, never_correct, alternating };
  explicit MockPolicy(Mode mode) : mode_(mode) {}

  std::string generate(const MCQInstance& instance, int draw_index) override {
    OptionSet answer = instance.answer;
    bool correct = true;
    switch (mode_) {
      case Mode::always_correct: break;
      case Mode::never_correct: correct = false; break;
      case Mode::alternating: correct = draw_index % 2 == 0; break;
    }
    if (!correct) {
      // Flip option A membership to guarantee a mismatch.
      answer.bits ^= 1u;
    }
    return "<think>considered each option</think><answer>" + answer.braced() +
           "</answer>";
  }

 private:
  Mode mode_;
};

class HttpPolicy : public PolicyClient {
 public:
  explicit HttpPolicy(ChatClient& client) : client_(client) {}

  std::string generate(const MCQInstance& instance, int) override {
    const std::string prompt =
        format_question(instance) +
        "\nThink step by step inside <think>...</think>, then give the final "
        "answer letters inside <answer>{...}</answer>.";
    const auto reply = client_.complete(prompt);
    if (!reply) throw TransportError("policy endpoint failed for " + instance.id);
    return *reply;
  }

 private:
  ChatClient& client_;
};

inline double measure_pass_rate(PolicyClient& policy,
                                const MCQInstance& instance, int k) {
  if (k < 1) throw ConfigError("pass-rate rollouts k must be >= 1");
  int passes = 0;
  for (int i = 0; i < k; ++i) {
    const std::string raw = policy.generate(instance, i);
    const ParsedResponse parsed = parse_response(raw, instance.option_count());
    if (answer_reward(parsed.final_answer, instance.answer)) ++passes;
  }
  return static_cast<double>(passes) / static_cast<double>(k);
}

// Seeded grouping of propositions into new instances: M draws without
// replacement per instance, template stem drawn per instance, options
// relabeled A.. in draw order, answer from proposition correctness (inverted
// for wrong-polarity templates).
inline std::vector<MCQInstance> group_propositions(std::vector<Proposition> pool,
                                                   const ReformConfig& config,
                                                   Rng& rng,
                                                   const std::string& id_prefix = "reform") {
  std::vector<MCQInstance> out;
  if (pool.empty()) return out;
  if (config.group_size < 1) throw ConfigError("group_size must be >= 1");
  if (config.templates.empty()) throw ConfigError("templates must be non-empty");
  rng.shuffle(pool);
  const size_t m = static_cast<size_t>(config.group_size);
  size_t pos = 0;
  int serial = 0;
  while (pos < pool.size()) {
    const size_t take = std::min(m, pool.size() - pos);
    if (take < m && config.remainder == RemainderPolicy::drop) break;
    const StemTemplate& tpl =
        config.templates[rng.below(config.templates.size())];
    MCQInstance inst;
    inst.id = id_prefix + "-" + std::to_string(serial++);
    inst.stem = tpl.text;
    inst.origin = Origin::reformulated;
    for (size_t i = 0; i < take; ++i) {
      const Proposition& p = pool[pos + i];
      const char label = static_cast<char>('A' + i);
      inst.options.push_back({label, p.statement});
      const bool select = tpl.wrong_polarity ? !p.is_correct : p.is_correct;
      if (select) inst.answer.insert(label);
      inst.source_ids.push_back(p.id);
    }
    out.push_back(std::move(inst));
    pos += take;
  }
  return out;
}

// One reformulation pass per Algorithm-style schedule: identity before the
// trigger step, otherwise regroup the easiest-alpha split and reshuffle.
inline std::vector<MCQInstance> reformulate_step(int step,
                                                 std::vector<MCQInstance> dataset,
                                                 ChatClient* judge,
                                                 const ReformConfig& config) {
  if (step < config.trigger_step) return dataset;
  auto [shuffle_set, keep_set] =
      rank_and_split(std::move(dataset), config.alpha_at(step));
  std::vector<Proposition> pool;
  for (const auto& inst : shuffle_set) {
    auto props = deconstruct(inst, config.separator);
    pool.insert(pool.end(), props.begin(), props.end());
  }
  if (judge) {
    JudgeEndpointConfig jc;
    jc.domain = config.domain;
    polish_pool(pool, *judge, jc);
  }
  Rng rng(config.seed);
  auto reformed = group_propositions(std::move(pool), config, rng,
                                     "rf" + std::to_string(step));
  std::vector<MCQInstance> result = std::move(reformed);
  result.insert(result.end(), keep_set.begin(), keep_set.end());
  rng.shuffle(result);
  return result;
}

}  // namespace clarity
