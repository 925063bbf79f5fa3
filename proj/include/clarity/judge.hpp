#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "clarity/mcq.hpp"
#include "clarity/prompts.hpp"
#include "clarity/reward.hpp"
#include "httplib.h"
#include "json.hpp"

namespace clarity {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JudgeEndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model_name = "judge";
  double temperature = 0.0;
  int timeout_ms = 30000;
  int max_retries = 2;
  int max_parallel = 4;
  std::string api_key_env = "CLARITY_JUDGE_API_KEY";
  PromptLang prompt_lang = PromptLang::en;
  Domain domain = Domain::generic;
  // Optional template file overrides.
  std::string consistency_template_path;
  std::string polish_template_path;
};

inline JudgeEndpointConfig judge_config_from_json(const nlohmann::json& j) {
  JudgeEndpointConfig c;
  if (j.contains("base_url")) c.base_url = j["base_url"];
  if (j.contains("model_name")) c.model_name = j["model_name"];
  if (j.contains("temperature")) c.temperature = j["temperature"];
  if (j.contains("timeout_ms")) c.timeout_ms = j["timeout_ms"];
  if (j.contains("max_retries")) c.max_retries = j["max_retries"];
  if (j.contains("max_parallel")) c.max_parallel = j["max_parallel"];
  if (j.contains("api_key_env")) c.api_key_env = j["api_key_env"];
  if (j.contains("prompt_lang"))
    c.prompt_lang = j["prompt_lang"] == "zh" ? PromptLang::zh : PromptLang::en;
  if (j.contains("domain")) {
    const std::string d = j["domain"];
    c.domain = d == "legal"     ? Domain::legal
               : d == "medical" ? Domain::medical
                                : Domain::generic;
  }
  if (j.contains("consistency_template_path"))
    c.consistency_template_path = j["consistency_template_path"];
  if (j.contains("polish_template_path"))
    c.polish_template_path = j["polish_template_path"];
  if (c.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (c.temperature < 0) throw ConfigError("temperature must be >= 0");
  return c;
}

// Single-prompt chat completion. nullopt signals transport failure after the
// client's own retries.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::optional<std::string> complete(const std::string& prompt) = 0;
};

// OpenAI-compatible POST {base_url}/chat/completions.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(JudgeEndpointConfig config)
      : config_(std::move(config)) {
    const auto scheme_end = config_.base_url.find("://");
    std::string rest = scheme_end == std::string::npos
                           ? config_.base_url
                           : config_.base_url.substr(scheme_end + 3);
    const auto slash = rest.find('/');
    host_ = scheme_end == std::string::npos
                ? rest.substr(0, slash)
                : config_.base_url.substr(0, scheme_end + 3) + rest.substr(0, slash);
    path_prefix_ = slash == std::string::npos ? "" : rest.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/')
      path_prefix_.pop_back();
  }

  std::optional<std::string> complete(const std::string& prompt) override {
    nlohmann::json body{
        {"model", config_.model_name},
        {"temperature", config_.temperature},
        {"messages",
         nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const std::string payload = body.dump();
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      httplib::Client cli(host_);
      cli.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
      cli.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
      httplib::Headers headers;
      if (const char* key = std::getenv(config_.api_key_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + key);
      auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload,
                          "application/json");
      if (res && res->status == 200) {
        try {
          auto j = nlohmann::json::parse(res->body);
          return j.at("choices").at(0).at("message").at("content")
              .get<std::string>();
        } catch (const std::exception&) {
          // Malformed body, retry.
        }
      }
      if (attempt < config_.max_retries)
        std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
    }
    return std::nullopt;
  }

 private:
  JudgeEndpointConfig config_;
  std::string host_;
  std::string path_prefix_;
};

// Deterministic test double. Replies are a pure function of the prompt:
//   - polish prompts echo the original statement in braces
//   - quality prompts reply "{Answer 1}" unless configured otherwise
//   - consistency prompts parse a [[BELIEVED:..]] sentinel from the
//     embedded reasoning text; absent sentinel yields "unclear"
// Instrumented with call and concurrency counters for tests.
class MockJudge : public ChatClient {
 public:
  int fail_from_call = -1;  // calls with index >= this fail; -1 = never
  int latency_ms = 0;
  std::string quality_winner = "{Answer 1}";

  std::optional<std::string> complete(const std::string& prompt) override {
    const int call = call_count_.fetch_add(1);
    const int now = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    if (latency_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms));
    in_flight_.fetch_sub(1);
    if (fail_from_call >= 0 && call >= fail_from_call) return std::nullopt;
    return reply_for(prompt);
  }

  static std::string reply_for(const std::string& prompt) {
    if (prompt.find("Original statement:") != std::string::npos ||
        prompt.find("原始命题：") != std::string::npos) {
      const std::string marker = prompt.find("Original statement:") !=
                                         std::string::npos
                                     ? "Original statement:"
                                     : "原始命题：";
      std::string stmt = prompt.substr(prompt.find(marker) + marker.size());
      while (!stmt.empty() && (stmt.front() == ' ' || stmt.front() == '\n'))
        stmt.erase(stmt.begin());
      while (!stmt.empty() && (stmt.back() == ' ' || stmt.back() == '\n'))
        stmt.pop_back();
      return "{" + stmt + "}";
    }
    if (prompt.find("Answer 1:") != std::string::npos) return "{Answer 1}";
    const auto open = prompt.find("[[BELIEVED:");
    if (open != std::string::npos) {
      const auto close = prompt.find("]]", open);
      if (close != std::string::npos) {
        const auto body = prompt.substr(open + 11, close - open - 11);
        return "{" + body + "}";
      }
    }
    return "unclear";
  }

  int call_count() const { return call_count_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  std::atomic<int> call_count_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

// Ordered parallel map with at most max_parallel concurrent invocations.
template <typename In, typename Out>
std::vector<Out> parallel_map(const std::vector<In>& items,
                              const std::function<Out(const In&)>& fn,
                              int max_parallel) {
  std::vector<Out> results(items.size());
  if (items.empty()) return results;
  if (max_parallel < 1) max_parallel = 1;
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      results[i] = fn(items[i]);
    }
  };
  const int threads = std::min<int>(max_parallel, static_cast<int>(items.size()));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

struct JudgeVerdict {
  std::optional<OptionSet> believed;  // nullopt = unparseable
  std::string raw_reply;
};

inline std::string build_consistency_prompt(
    const MCQInstance& instance, std::string_view thinking,
    const std::vector<Exemplar>& exemplars, Domain domain,
    PromptLang lang = PromptLang::en, const std::string& template_text = "") {
  const std::string tpl =
      template_text.empty() ? consistency_template(lang) : template_text;
  return render_template(tpl, {{"role", domain_role(domain, lang)},
                               {"examples", format_exemplars(exemplars)},
                               {"question", format_question(instance)},
                               {"reasoning", std::string(thinking)}});
}

inline JudgeVerdict judge_consistency(ChatClient& client,
                                      const MCQInstance& instance,
                                      std::string_view thinking,
                                      const JudgeEndpointConfig& config = {}) {
  std::string tpl;
  if (!config.consistency_template_path.empty())
    tpl = load_template_file(config.consistency_template_path);
  const std::string prompt = build_consistency_prompt(
      instance, thinking, default_exemplars(config.domain), config.domain,
      config.prompt_lang, tpl);
  const auto reply = client.complete(prompt);
  if (!reply) return {std::nullopt, ""};
  return {find_option_set(*reply, instance.option_count()), *reply};
}

inline std::vector<JudgeVerdict> judge_consistency_batch(
    ChatClient& client, const std::vector<const MCQInstance*>& instances,
    const std::vector<std::string>& thinkings,
    const JudgeEndpointConfig& config = {}) {
  std::vector<size_t> idx(instances.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return parallel_map<size_t, JudgeVerdict>(
      idx,
      [&](const size_t& i) {
        return judge_consistency(client, *instances[i], thinkings[i], config);
      },
      config.max_parallel);
}

// Returns (statement, polished). Judge failure or an unparseable reply falls
// back to the raw statement so the pipeline never loses data.
inline std::pair<std::string, bool> polish_proposition(
    ChatClient& client, const std::string& raw_statement, Domain domain,
    PromptLang lang = PromptLang::en, const std::string& template_text = "") {
  if (raw_statement.empty()) return {raw_statement, false};
  const std::string tpl =
      template_text.empty() ? polish_template(lang) : template_text;
  const std::string prompt =
      render_template(tpl, {{"role", domain_role(domain, lang)},
                            {"examples", ""},
                            {"original_statement", raw_statement}});
  const auto reply = client.complete(prompt);
  if (!reply) return {raw_statement, false};
  // Last brace group in the reply carries the polished statement.
  size_t last_open = std::string::npos, last_len = 0, pos = 0;
  while (true) {
    const size_t open = reply->find('{', pos);
    if (open == std::string::npos) break;
    const size_t close = reply->find('}', open + 1);
    if (close == std::string::npos) break;
    last_open = open + 1;
    last_len = close - open - 1;
    pos = close + 1;
  }
  if (last_open == std::string::npos) return {raw_statement, false};
  return {reply->substr(last_open, last_len), true};
}

enum class QualityWinner { Answer1, Answer2, Unparseable };

inline QualityWinner quality_compare(ChatClient& client,
                                     const std::string& question,
                                     const std::string& answer_1,
                                     const std::string& answer_2,
                                     Domain domain = Domain::generic) {
  const std::string prompt = render_template(
      quality_template(), {{"role", domain_role(domain, PromptLang::en)},
                           {"question", question},
                           {"answer_1", answer_1},
                           {"answer_2", answer_2}});
  const auto reply = client.complete(prompt);
  if (!reply) return QualityWinner::Unparseable;
  if (reply->find("{Answer 1}") != std::string::npos)
    return QualityWinner::Answer1;
  if (reply->find("{Answer 2}") != std::string::npos)
    return QualityWinner::Answer2;
  return QualityWinner::Unparseable;
}

}  // namespace clarity
