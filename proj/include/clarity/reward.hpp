#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clarity/mcq.hpp"
#include "json.hpp"

namespace clarity {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ComponentWeights {
  double value_true = 1.0;
  double value_false = 0.0;
  double weight = 1.0;

  double apply(bool ok) const {
    return weight * (ok ? value_true : value_false);
  }
};

enum class Stage { Stage1, Stage2, VanillaRL };

inline std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Stage1: return "stage1";
    case Stage::Stage2: return "stage2";
    case Stage::VanillaRL: return "vanilla";
  }
  return "?";
}

inline Stage stage_from_name(const std::string& name) {
  if (name == "stage1") return Stage::Stage1;
  if (name == "stage2") return Stage::Stage2;
  if (name == "vanilla") return Stage::VanillaRL;
  throw ConfigError("unknown stage: " + name);
}

struct StageConfig {
  Stage stage = Stage::Stage2;
  ComponentWeights format;
  std::optional<ComponentWeights> structure;
  std::optional<ComponentWeights> answer;
  std::optional<ComponentWeights> consistency;

  static StageConfig stage1_default() {
    StageConfig c;
    c.stage = Stage::Stage1;
    c.format = {1.0, 0.0, 1.0};
    c.structure = ComponentWeights{1.0, 0.0, 1.0};
    return c;
  }

  static StageConfig stage2_default() {
    StageConfig c;
    c.stage = Stage::Stage2;
    c.format = {0.0, -1.0, 0.1};
    c.consistency = ComponentWeights{0.0, -1.0, 1.0};
    c.answer = ComponentWeights{1.0, 0.0, 1.0};
    return c;
  }

  static StageConfig vanilla_default() {
    StageConfig c;
    c.stage = Stage::VanillaRL;
    c.format = {1.0, 0.0, 1.0};
    c.answer = ComponentWeights{1.0, 0.0, 1.0};
    return c;
  }

  static StageConfig defaults_for(Stage s) {
    switch (s) {
      case Stage::Stage1: return stage1_default();
      case Stage::Stage2: return stage2_default();
      case Stage::VanillaRL: return vanilla_default();
    }
    throw ConfigError("bad stage");
  }
};

inline nlohmann::json to_json(const ComponentWeights& w) {
  return {{"true", w.value_true}, {"false", w.value_false}, {"weight", w.weight}};
}

inline ComponentWeights weights_from_json(const nlohmann::json& j) {
  return {j.at("true").get<double>(), j.at("false").get<double>(),
          j.at("weight").get<double>()};
}

inline nlohmann::json to_json(const StageConfig& c) {
  nlohmann::json comps{{"format", to_json(c.format)}};
  if (c.structure) comps["structure"] = to_json(*c.structure);
  if (c.answer) comps["answer"] = to_json(*c.answer);
  if (c.consistency) comps["consistency"] = to_json(*c.consistency);
  return {{"stage", stage_name(c.stage)}, {"components", comps}};
}

inline StageConfig stage_config_from_json(const nlohmann::json& j) {
  StageConfig c = StageConfig::defaults_for(stage_from_name(j.at("stage")));
  if (!j.contains("components")) return c;
  const auto& comps = j["components"];
  if (comps.contains("format")) c.format = weights_from_json(comps["format"]);
  if (comps.contains("structure"))
    c.structure = weights_from_json(comps["structure"]);
  if (comps.contains("answer")) c.answer = weights_from_json(comps["answer"]);
  if (comps.contains("consistency"))
    c.consistency = weights_from_json(comps["consistency"]);
  return c;
}

struct RewardBreakdown {
  bool format_ok = false;
  std::optional<bool> structure_ok;
  std::optional<bool> answer_ok;
  std::optional<bool> consistency_ok;
  double total = 0.0;
};

inline bool format_reward(const ParsedResponse& parsed) {
  return parsed.has_think_tag && parsed.has_answer_tag;
}

// True iff every option letter A..chr(A+M-1) occurs standalone in the
// thinking text.
inline bool structure_reward(std::string_view thinking, int option_count) {
  const OptionSet mentioned = standalone_letters(thinking, option_count);
  return mentioned.size() == option_count;
}

// Strict exact match; every other case scores zero.
inline bool answer_reward(OptionSet predicted, OptionSet gold) {
  return predicted == gold;
}

// No penalty only when the believed set parsed and equals the final answer.
inline bool consistency_reward(const std::optional<OptionSet>& believed,
                               OptionSet final_answer) {
  return believed.has_value() && *believed == final_answer;
}

inline double total_reward(const RewardBreakdown& b, const StageConfig& c) {
  auto need = [](const std::optional<bool>& pred, const char* name) -> bool {
    if (!pred)
      throw ConfigError(std::string("missing predicate for component: ") + name);
    return *pred;
  };
  double total = c.format.apply(b.format_ok);
  if (c.structure) total += c.structure->apply(need(b.structure_ok, "structure"));
  if (c.answer) total += c.answer->apply(need(b.answer_ok, "answer"));
  if (c.consistency)
    total += c.consistency->apply(need(b.consistency_ok, "consistency"));
  return total;
}

// Group-relative advantages: (r - mean) / population std; all zeros when the
// group has zero variance.
inline std::vector<double> group_advantages(const std::vector<double>& rewards) {
  const size_t n = rewards.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);
  if (var == 0.0) return out;
  const double sd = std::sqrt(var);
  for (size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

// believed is ignored for Stage1 and VanillaRL (the judge is not consulted).
inline RewardBreakdown score_rollout(const MCQInstance& instance,
                                     std::string_view raw,
                                     const std::optional<OptionSet>& believed,
                                     const StageConfig& config) {
  const int m = instance.option_count();
  const ParsedResponse parsed = parse_response(raw, m);
  RewardBreakdown b;
  b.format_ok = format_reward(parsed);
  if (config.structure) b.structure_ok = structure_reward(parsed.thinking, m);
  if (config.answer) b.answer_ok = answer_reward(parsed.final_answer, instance.answer);
  if (config.consistency)
    b.consistency_ok = consistency_reward(believed, parsed.final_answer);
  b.total = total_reward(b, config);
  return b;
}

}  // namespace clarity
