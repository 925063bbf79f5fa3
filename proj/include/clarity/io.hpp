#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clarity/mcq.hpp"
#include "json.hpp"

namespace clarity {

using json = nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json to_json(const MCQInstance& inst) {
  json opts = json::array();
  for (const auto& o : inst.options)
    opts.push_back({{"label", std::string(1, o.label)}, {"text", o.text}});
  json answer = json::array();
  for (char c : inst.answer.letters()) answer.push_back(std::string(1, c));
  json j{{"id", inst.id},
         {"stem", inst.stem},
         {"options", opts},
         {"answer", answer},
         {"origin", inst.origin == Origin::original ? "original"
                                                    : "reformulated"}};
  if (inst.pass_rate) j["pass_rate"] = *inst.pass_rate;
  if (!inst.source_ids.empty()) j["source_ids"] = inst.source_ids;
  return j;
}

inline MCQInstance instance_from_json(const json& j) {
  MCQInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.stem = j.at("stem").get<std::string>();
  for (const auto& o : j.at("options")) {
    const std::string label = o.at("label").get<std::string>();
    if (label.size() != 1)
      throw IoError("option label must be a single letter: " + label);
    inst.options.push_back({label[0], o.at("text").get<std::string>()});
  }
  for (const auto& a : j.at("answer")) {
    const std::string letter = a.get<std::string>();
    if (letter.size() != 1)
      throw IoError("answer label must be a single letter: " + letter);
    inst.answer.insert(letter[0]);
  }
  if (j.contains("pass_rate") && !j["pass_rate"].is_null())
    inst.pass_rate = j["pass_rate"].get<double>();
  if (j.contains("origin") && j["origin"] == "reformulated")
    inst.origin = Origin::reformulated;
  if (j.contains("source_ids"))
    inst.source_ids = j["source_ids"].get<std::vector<std::string>>();
  return inst;
}

// JSONL files may carry a leading audit line {"config": {...}}; readers skip
// any record holding only that key.
inline bool is_config_line(const json& j) {
  return j.is_object() && j.size() == 1 && j.contains("config");
}

inline std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<json> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (is_config_line(j)) continue;
    records.push_back(std::move(j));
  }
  return records;
}

inline void write_jsonl(const std::string& path,
                        const std::vector<json>& records,
                        const std::optional<json>& config = std::nullopt) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (config) out << json{{"config", *config}}.dump() << "\n";
  for (const auto& r : records) out << r.dump() << "\n";
}

inline std::vector<MCQInstance> read_instances(const std::string& path) {
  std::vector<MCQInstance> out;
  for (const auto& j : read_jsonl(path)) out.push_back(instance_from_json(j));
  return out;
}

inline void write_instances(const std::string& path,
                            const std::vector<MCQInstance>& instances,
                            const std::optional<json>& config = std::nullopt) {
  std::vector<json> records;
  records.reserve(instances.size());
  for (const auto& inst : instances) records.push_back(to_json(inst));
  write_jsonl(path, records, config);
}

}  // namespace clarity
