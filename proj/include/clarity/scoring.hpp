#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clarity/analysis.hpp"
#include "clarity/io.hpp"
#include "clarity/judge.hpp"
#include "clarity/mcq.hpp"
#include "clarity/reward.hpp"

namespace clarity {

// One scored (instance, response) pair, with everything downstream analysis
// needs.
struct ScoredItem {
  std::string instance_id;
  RewardBreakdown breakdown;
  OptionSet gold;
  OptionSet predicted;
  std::optional<OptionSet> believed;
  InconsistencyLabel label = InconsistencyLabel::Unjudgeable;
  bool explicit_pattern = false;
  size_t thinking_len = 0;
};

using ScorePair = std::pair<MCQInstance, std::string>;

// Scores a batch under one stage config. When the stage carries a
// consistency component the judge is consulted per item (bounded fan-out);
// judge failure on an item degrades that item to Unjudgeable, never the
// batch. Output order matches input order.
inline std::vector<ScoredItem> score_batch(const std::vector<ScorePair>& pairs,
                                           const StageConfig& stage,
                                           ChatClient* judge,
                                           const JudgeEndpointConfig& jc = {}) {
  std::vector<std::optional<OptionSet>> believed(pairs.size(), std::nullopt);
  if (stage.consistency && judge) {
    std::vector<size_t> idx(pairs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    believed = parallel_map<size_t, std::optional<OptionSet>>(
        idx,
        [&](const size_t& i) {
          const auto& [inst, raw] = pairs[i];
          const ParsedResponse parsed = parse_response(raw, inst.option_count());
          return judge_consistency(*judge, inst, parsed.thinking, jc).believed;
        },
        jc.max_parallel);
  }
  std::vector<ScoredItem> out;
  out.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& [inst, raw] = pairs[i];
    const int m = inst.option_count();
    const ParsedResponse parsed = parse_response(raw, m);
    ScoredItem item;
    item.instance_id = inst.id;
    item.breakdown = score_rollout(inst, raw, believed[i], stage);
    item.gold = inst.answer;
    item.predicted = parsed.final_answer;
    item.believed = believed[i];
    item.label = classify_inconsistency(believed[i], parsed.final_answer);
    item.explicit_pattern =
        classify_pattern(parsed.thinking, m) == PatternLabel::Explicit;
    item.thinking_len = parsed.thinking.size();
    out.push_back(std::move(item));
  }
  return out;
}

inline json to_json(const ScoredItem& item) {
  json j{{"instance_id", item.instance_id},
         {"total", item.breakdown.total},
         {"format_ok", item.breakdown.format_ok}};
  if (item.breakdown.structure_ok) j["structure_ok"] = *item.breakdown.structure_ok;
  if (item.breakdown.answer_ok) j["answer_ok"] = *item.breakdown.answer_ok;
  if (item.breakdown.consistency_ok)
    j["consistency_ok"] = *item.breakdown.consistency_ok;
  j["gold"] = item.gold.letters();
  j["predicted"] = item.predicted.letters();
  j["believed"] = item.believed ? json(item.believed->letters()) : json(nullptr);
  j["consistency_label"] = label_name(item.label);
  j["explicit"] = item.explicit_pattern;
  j["thinking_len"] = item.thinking_len;
  return j;
}

// Reads a scored record back into an analysis record. Records written by
// older pipelines may omit the believed/gold fields; missing believed maps
// to Unjudgeable.
inline LabeledRecord labeled_record_from_json(const json& j) {
  LabeledRecord lr;
  lr.record.instance_id = j.value("instance_id", "");
  for (char c : j.value("gold", std::string())) lr.record.gold.insert(c);
  for (char c : j.value("predicted", std::string())) lr.record.predicted.insert(c);
  if (j.contains("believed") && !j["believed"].is_null()) {
    OptionSet b;
    for (char c : j["believed"].get<std::string>()) b.insert(c);
    lr.record.believed = b;
  }
  lr.record.response_length = j.value("thinking_len", size_t{0});
  lr.pattern = j.value("explicit", false) ? PatternLabel::Explicit
                                          : PatternLabel::AsAWhole;
  return lr;
}

}  // namespace clarity
