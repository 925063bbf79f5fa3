#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "clarity/io.hpp"
#include "clarity/scoring.hpp"
#include "httplib.h"

namespace clarity {

inline constexpr const char* kServiceVersion = "0.1.0";

struct BadRequest : std::runtime_error {
  int item_index;  // -1 when not item-specific
  BadRequest(std::string msg, int index = -1)
      : std::runtime_error(std::move(msg)), item_index(index) {}
};

// HTTP reward service for external RL trainers. Scoring state is immutable
// and shared read-only; judge fan-out per request respects max_parallel.
class RewardService {
 public:
  RewardService(std::map<Stage, StageConfig> stages,
                std::shared_ptr<ChatClient> judge, JudgeEndpointConfig jc = {})
      : stages_(std::move(stages)), judge_(std::move(judge)),
        judge_config_(std::move(jc)) {
    for (Stage s : {Stage::Stage1, Stage::Stage2, Stage::VanillaRL})
      if (!stages_.count(s)) stages_.emplace(s, StageConfig::defaults_for(s));
  }

  json handle_score(const json& request) const {
    if (!request.is_object()) throw BadRequest("request body must be an object");
    if (!request.contains("stage")) throw BadRequest("missing field: stage");
    Stage stage_id;
    try {
      stage_id = stage_from_name(request["stage"].get<std::string>());
    } catch (const std::exception& e) {
      throw BadRequest(e.what());
    }
    if (!request.contains("items") || !request["items"].is_array() ||
        request["items"].empty())
      throw BadRequest("items must be a non-empty array");

    std::vector<ScorePair> pairs;
    for (size_t i = 0; i < request["items"].size(); ++i) {
      const auto& item = request["items"][i];
      MCQInstance inst;
      try {
        inst = instance_from_json(item.at("instance"));
      } catch (const std::exception& e) {
        throw BadRequest(std::string("bad instance: ") + e.what(),
                         static_cast<int>(i));
      }
      const auto violations = validate_instance(inst);
      if (!violations.empty())
        throw BadRequest("invalid instance: " + violations.front(),
                         static_cast<int>(i));
      if (!item.contains("response_text"))
        throw BadRequest("missing response_text", static_cast<int>(i));
      pairs.emplace_back(std::move(inst), item["response_text"].get<std::string>());
    }

    const StageConfig& stage = stages_.at(stage_id);
    const auto scored = score_batch(pairs, stage, judge_.get(), judge_config_);
    json items = json::array();
    for (const auto& s : scored) items.push_back(to_json(s));
    return json{{"items", items}};
  }

  json handle_advantages(const json& request) const {
    if (!request.is_object() || !request.contains("groups") ||
        !request["groups"].is_array())
      throw BadRequest("body must be {\"groups\": [[..], ..]}");
    json out = json::array();
    for (size_t i = 0; i < request["groups"].size(); ++i) {
      const auto& group = request["groups"][i];
      if (!group.is_array() || group.empty())
        throw BadRequest("each group must be a non-empty number array",
                         static_cast<int>(i));
      std::vector<double> rewards;
      for (const auto& v : group) {
        if (!v.is_number())
          throw BadRequest("rewards must be numbers", static_cast<int>(i));
        rewards.push_back(v.get<double>());
      }
      out.push_back(group_advantages(rewards));
    }
    return json{{"advantages", out}};
  }

  json handle_health(bool deep) const {
    json j{{"status", "ok"}, {"version", kServiceVersion}};
    if (deep) {
      const auto reply = judge_ ? judge_->complete("health probe: reply with {A}")
                                : std::nullopt;
      j["judge"] = reply.has_value() ? "reachable" : "unreachable";
    }
    return j;
  }

  void mount(httplib::Server& server) const {
    server.Post("/v1/score", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      dispatch(req, res, [this](const json& body) { return handle_score(body); });
    });
    server.Post("/v1/advantages", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      dispatch(req, res,
               [this](const json& body) { return handle_advantages(body); });
    });
    server.Get("/healthz", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      const bool deep = req.get_param_value("deep") == "true";
      res.set_content(handle_health(deep).dump(), "application/json");
    });
  }

 private:
  template <typename Fn>
  static void dispatch(const httplib::Request& req, httplib::Response& res,
                       Fn&& fn) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    try {
      res.set_content(fn(body).dump(), "application/json");
    } catch (const BadRequest& e) {
      res.status = 400;
      json err{{"error", e.what()}};
      if (e.item_index >= 0) err["item_index"] = e.item_index;
      res.set_content(err.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  std::map<Stage, StageConfig> stages_;
  std::shared_ptr<ChatClient> judge_;
  JudgeEndpointConfig judge_config_;
};

}  // namespace clarity
