#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clarity/mcq.hpp"
#include "clarity/reward.hpp"
#include "json.hpp"

namespace clarity {

struct EvalRecord {
  std::string instance_id;
  OptionSet gold;
  OptionSet predicted;
  std::optional<OptionSet> believed;  // nullopt = unparseable
  size_t response_length = 0;         // characters of thinking

  bool correct() const { return predicted == gold; }
  bool consistent() const { return believed && *believed == predicted; }
};

enum class InconsistencyLabel {
  Consistent,
  OverExclusion,
  OverSelection,
  DissociatedAnswer,
  Unjudgeable,
};

inline std::string label_name(InconsistencyLabel l) {
  switch (l) {
    case InconsistencyLabel::Consistent: return "consistent";
    case InconsistencyLabel::OverExclusion: return "over_exclusion";
    case InconsistencyLabel::OverSelection: return "over_selection";
    case InconsistencyLabel::DissociatedAnswer: return "dissociated";
    case InconsistencyLabel::Unjudgeable: return "unjudgeable";
  }
  return "?";
}

inline InconsistencyLabel classify_inconsistency(
    const std::optional<OptionSet>& believed, OptionSet predicted) {
  if (!believed) return InconsistencyLabel::Unjudgeable;
  if (*believed == predicted) return InconsistencyLabel::Consistent;
  if (believed->empty()) return InconsistencyLabel::OverExclusion;
  if (predicted.strict_subset_of(*believed))
    return InconsistencyLabel::OverSelection;
  return InconsistencyLabel::DissociatedAnswer;
}

enum class PatternLabel { Explicit, AsAWhole };

// Definitionally tied to structure_reward: a response is Explicit iff its
// thinking itemizes every option letter.
inline PatternLabel classify_pattern(std::string_view thinking, int option_count) {
  return structure_reward(thinking, option_count) ? PatternLabel::Explicit
                                                  : PatternLabel::AsAWhole;
}

struct ConfusionCounts {
  long correct_consistent = 0;
  long correct_inconsistent = 0;
  long incorrect_consistent = 0;
  long incorrect_inconsistent = 0;

  long total() const {
    return correct_consistent + correct_inconsistent + incorrect_consistent +
           incorrect_inconsistent;
  }
};

struct Metrics {
  double acc = 0.0;
  double cons_rate = 0.0;
  double acc_plus = 0.0;
  ConfusionCounts confusion;
};

inline Metrics metrics_from_confusion(const ConfusionCounts& c) {
  const double n = static_cast<double>(c.total());
  if (n == 0) throw std::invalid_argument("empty confusion counts");
  Metrics m;
  m.confusion = c;
  m.acc = static_cast<double>(c.correct_consistent + c.correct_inconsistent) / n;
  m.cons_rate =
      static_cast<double>(c.correct_consistent + c.incorrect_consistent) / n;
  m.acc_plus = static_cast<double>(c.correct_consistent) / n;
  return m;
}

inline Metrics compute_metrics(const std::vector<EvalRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("compute_metrics needs at least one record");
  ConfusionCounts c;
  for (const auto& r : records) {
    const bool correct = r.correct();
    const bool consistent = r.consistent();  // Unjudgeable counts inconsistent
    if (correct && consistent) ++c.correct_consistent;
    else if (correct) ++c.correct_inconsistent;
    else if (consistent) ++c.incorrect_consistent;
    else ++c.incorrect_inconsistent;
  }
  return metrics_from_confusion(c);
}

struct DynamicsRow {
  int step = 0;
  double acc = 0.0;
  double cons_rate = 0.0;
  double acc_plus = 0.0;
  long over_exclusion = 0;
  long over_selection = 0;
  long dissociated = 0;
  long unjudgeable = 0;
  long explicit_count = 0;
  long as_a_whole_count = 0;
  double mean_response_length = 0.0;
  // Exact policy-mass rates alongside the sampled ones; populated by the
  // simulator, zero elsewhere.
  double expected_acc = 0.0;
  double expected_cons = 0.0;
  double expected_explicit = 0.0;
};

struct LabeledRecord {
  EvalRecord record;
  PatternLabel pattern = PatternLabel::AsAWhole;
};

inline DynamicsRow summarize_batch(int step,
                                   const std::vector<LabeledRecord>& batch) {
  DynamicsRow row;
  row.step = step;
  if (batch.empty()) return row;
  std::vector<EvalRecord> records;
  records.reserve(batch.size());
  double total_len = 0.0;
  for (const auto& lr : batch) {
    records.push_back(lr.record);
    total_len += static_cast<double>(lr.record.response_length);
    switch (classify_inconsistency(lr.record.believed, lr.record.predicted)) {
      case InconsistencyLabel::OverExclusion: ++row.over_exclusion; break;
      case InconsistencyLabel::OverSelection: ++row.over_selection; break;
      case InconsistencyLabel::DissociatedAnswer: ++row.dissociated; break;
      case InconsistencyLabel::Unjudgeable: ++row.unjudgeable; break;
      case InconsistencyLabel::Consistent: break;
    }
    if (lr.pattern == PatternLabel::Explicit) ++row.explicit_count;
    else ++row.as_a_whole_count;
  }
  const Metrics m = compute_metrics(records);
  row.acc = m.acc;
  row.cons_rate = m.cons_rate;
  row.acc_plus = m.acc_plus;
  row.mean_response_length = total_len / static_cast<double>(batch.size());
  return row;
}

inline std::vector<DynamicsRow> dynamics_report(
    const std::vector<std::pair<int, std::vector<LabeledRecord>>>& batches) {
  std::vector<DynamicsRow> rows;
  int prev_step = -1;
  bool first = true;
  for (const auto& [step, batch] : batches) {
    if (!first && step <= prev_step)
      throw std::invalid_argument("dynamics batches must have strictly increasing steps");
    first = false;
    prev_step = step;
    rows.push_back(summarize_batch(step, batch));
  }
  return rows;
}

inline const char* kDynamicsCsvHeader =
    "step,acc,cons_rate,acc_plus,over_exclusion,over_selection,dissociated,"
    "unjudgeable,explicit,as_a_whole,mean_len";

inline std::string dynamics_csv(const std::vector<DynamicsRow>& rows,
                                const std::string& config_comment = "") {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  if (!config_comment.empty()) out << "# config: " << config_comment << "\n";
  out << kDynamicsCsvHeader << "\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.acc << ',' << r.cons_rate << ',' << r.acc_plus
        << ',' << r.over_exclusion << ',' << r.over_selection << ','
        << r.dissociated << ',' << r.unjudgeable << ',' << r.explicit_count
        << ',' << r.as_a_whole_count << ',' << r.mean_response_length << "\n";
  }
  return out.str();
}

inline nlohmann::json to_json(const DynamicsRow& r) {
  return {{"step", r.step},
          {"acc", r.acc},
          {"cons_rate", r.cons_rate},
          {"acc_plus", r.acc_plus},
          {"over_exclusion", r.over_exclusion},
          {"over_selection", r.over_selection},
          {"dissociated", r.dissociated},
          {"unjudgeable", r.unjudgeable},
          {"explicit", r.explicit_count},
          {"as_a_whole", r.as_a_whole_count},
          {"mean_len", r.mean_response_length},
          {"expected_acc", r.expected_acc},
          {"expected_cons", r.expected_cons},
          {"expected_explicit", r.expected_explicit}};
}

}  // namespace clarity
