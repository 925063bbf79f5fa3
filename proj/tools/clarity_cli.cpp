// Umbrella CLI binding the scoring, reformulation, analysis, simulation and
// serving pipelines. All randomness is driven by explicit --seed flags.
//
// Exit codes: 0 success, 1 validation/usage error, 2 transport failure.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "clarity/analysis.hpp"
#include "clarity/io.hpp"
#include "clarity/judge.hpp"
#include "clarity/reformulate.hpp"
#include "clarity/scoring.hpp"
#include "clarity/service.hpp"
#include "clarity/sim.hpp"

namespace {

using namespace clarity;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTransport = 2;

std::shared_ptr<ChatClient> make_judge(const std::string& spec,
                                       JudgeEndpointConfig& config_out) {
  if (spec.empty()) return nullptr;
  if (spec == "mock") return std::make_shared<MockJudge>();
  std::ifstream in(spec);
  if (!in) throw ConfigError("cannot open judge config: " + spec);
  json j = json::parse(in);
  config_out = judge_config_from_json(j);
  return std::make_shared<HttpChatClient>(config_out);
}

std::unique_ptr<PolicyClient> make_policy(const std::string& spec,
                                          std::shared_ptr<ChatClient>& keepalive) {
  if (spec == "mock-always")
    return std::make_unique<MockPolicy>(MockPolicy::Mode::always_correct);
  if (spec == "mock-never")
    return std::make_unique<MockPolicy>(MockPolicy::Mode::never_correct);
  if (spec == "mock-alternating")
    return std::make_unique<MockPolicy>(MockPolicy::Mode::alternating);
  std::ifstream in(spec);
  if (!in) throw ConfigError("cannot open policy config: " + spec);
  JudgeEndpointConfig cfg = judge_config_from_json(json::parse(in));
  keepalive = std::make_shared<HttpChatClient>(cfg);
  return std::make_unique<HttpPolicy>(*keepalive);
}

std::vector<StemTemplate> load_templates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open templates file: " + path);
  std::vector<StemTemplate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    StemTemplate t;
    const auto tab = line.find('\t');
    if (tab != std::string::npos && line.substr(tab + 1) == "wrong") {
      t.text = line.substr(0, tab);
      t.wrong_polarity = true;
    } else {
      t.text = line;
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ConfigError("templates file is empty: " + path);
  return out;
}

StageConfig load_stage(const std::string& stage_name_arg,
                       const std::string& config_path) {
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open stage config: " + config_path);
    return stage_config_from_json(json::parse(in));
  }
  return StageConfig::defaults_for(stage_from_name(stage_name_arg));
}

int cmd_score(const std::string& in_path, const std::string& out_path,
              const std::string& stage_arg, const std::string& stage_config,
              const std::string& judge_spec) {
  const StageConfig stage = load_stage(stage_arg, stage_config);
  JudgeEndpointConfig jc;
  auto judge = make_judge(judge_spec, jc);
  std::vector<ScorePair> pairs;
  for (const auto& j : read_jsonl(in_path)) {
    MCQInstance inst = instance_from_json(j.at("instance"));
    const auto violations = validate_instance(inst);
    if (!violations.empty())
      throw ConfigError(inst.id + ": " + violations.front());
    pairs.emplace_back(std::move(inst), j.at("response_text").get<std::string>());
  }
  const auto scored = score_batch(pairs, stage, judge.get(), jc);
  std::vector<json> records;
  for (const auto& s : scored) records.push_back(to_json(s));
  write_jsonl(out_path, records,
              json{{"command", "score"}, {"stage", to_json(stage)},
                   {"judge", judge_spec.empty() ? "none" : judge_spec}});
  std::cout << "scored " << records.size() << " responses\n";
  return kExitOk;
}

int cmd_passrate(const std::string& in_path, const std::string& out_path,
                 int k, const std::string& policy_spec) {
  std::shared_ptr<ChatClient> keepalive;
  auto policy = make_policy(policy_spec, keepalive);
  auto instances = read_instances(in_path);
  for (auto& inst : instances)
    inst.pass_rate = measure_pass_rate(*policy, inst, k);
  write_instances(out_path, instances,
                  json{{"command", "passrate"}, {"k", k}, {"policy", policy_spec}});
  std::cout << "measured pass rate for " << instances.size() << " instances\n";
  return kExitOk;
}

int cmd_reformulate(const std::string& in_path, const std::string& out_path,
                    double alpha, int group_size, int step, uint64_t seed,
                    const std::string& templates_path,
                    const std::string& judge_spec, const std::string& remainder,
                    const std::string& separator) {
  ReformConfig config;
  config.alpha_schedule = {{config.trigger_step, alpha}};
  config.group_size = group_size;
  config.seed = seed;
  config.separator = separator;
  config.remainder = remainder == "short" ? RemainderPolicy::short_group
                                          : RemainderPolicy::drop;
  if (!templates_path.empty()) config.templates = load_templates(templates_path);
  JudgeEndpointConfig jc;
  auto judge = make_judge(judge_spec, jc);
  auto dataset = read_instances(in_path);
  auto result = reformulate_step(step, std::move(dataset), judge.get(), config);
  write_instances(out_path, result,
                  json{{"command", "reformulate"}, {"alpha", alpha},
                       {"group_size", group_size}, {"step", step},
                       {"seed", seed}, {"remainder", remainder}});
  std::cout << "wrote " << result.size() << " instances\n";
  return kExitOk;
}

int cmd_analyze(const std::string& records_path, const std::string& out_path,
                bool dynamics) {
  std::map<int, std::vector<LabeledRecord>> by_step;
  for (const auto& j : read_jsonl(records_path)) {
    const int step = dynamics ? j.value("step", 0) : 0;
    by_step[step].push_back(labeled_record_from_json(j));
  }
  if (by_step.empty()) throw ConfigError("no records in " + records_path);
  std::vector<std::pair<int, std::vector<LabeledRecord>>> batches(
      by_step.begin(), by_step.end());
  const auto rows = dynamics_report(batches);
  const Metrics overall = [&] {
    std::vector<EvalRecord> all;
    for (const auto& [step, batch] : batches)
      for (const auto& lr : batch) all.push_back(lr.record);
    return compute_metrics(all);
  }();
  std::cout.precision(1);
  std::cout << std::fixed << "acc=" << overall.acc * 100
            << "% cons=" << overall.cons_rate * 100
            << "% acc+=" << overall.acc_plus * 100 << "%\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << dynamics_csv(rows, json{{"records", records_path}}.dump());
  }
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_name, const std::string& config_path,
                 uint64_t seed, const std::string& out_path, bool vanilla) {
  SimConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open sim config: " + config_path);
    config = sim_config_from_json(json::parse(in));
  } else if (vanilla) {
    config = SimConfig::vanilla();
  }
  config.seed = seed;
  auto scenarios = preset_scenarios();
  const auto it = scenarios.find(scenario_name);
  if (it == scenarios.end()) throw ConfigError("unknown scenario: " + scenario_name);
  MockJudge judge;
  const auto result = run_sim(config, it->second, &judge);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot open " + out_path + " for writing");
  out << dynamics_csv(result.rows,
                      json{{"scenario", scenario_name}, {"seed", seed},
                           {"vanilla", vanilla}}.dump());
  const auto& last = result.rows.back();
  std::cout.precision(3);
  std::cout << std::fixed << "final acc=" << last.expected_acc
            << " cons=" << last.expected_cons
            << " explicit=" << last.expected_explicit << "\n";
  return kExitOk;
}

int cmd_serve(const std::string& bind, const std::string& stage_config,
              const std::string& judge_spec) {
  std::map<Stage, StageConfig> stages;
  if (!stage_config.empty()) {
    std::ifstream in(stage_config);
    if (!in) throw ConfigError("cannot open stage config: " + stage_config);
    const StageConfig c = stage_config_from_json(json::parse(in));
    stages.emplace(c.stage, c);
  }
  JudgeEndpointConfig jc;
  auto judge = make_judge(judge_spec, jc);
  RewardService service(std::move(stages), judge, jc);
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind must be host:port");
  const std::string host = bind.substr(0, colon);
  const int port = std::stoi(bind.substr(colon + 1));
  httplib::Server server;
  service.mount(server);
  std::cerr << json{{"event", "listening"}, {"host", host}, {"port", port}}.dump()
            << "\n";
  if (!server.listen(host, port)) {
    std::cerr << json{{"event", "bind_failed"}, {"bind", bind}}.dump() << "\n";
    return kExitTransport;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLARity consistency-aware reward engine"};
  app.require_subcommand(1);

  std::string in_path, out_path, stage_arg = "stage2", stage_config, judge_spec;
  std::string records_path, scenario = "pilot", sim_config_path, policy_spec;
  std::string bind = "127.0.0.1:8080", templates_path, remainder = "drop";
  std::string separator = " ";
  double alpha = 0.5;
  int group_size = 4, step = 0, k = 0;
  uint64_t seed = 0;
  bool dynamics = false, vanilla = false;

  auto* score = app.add_subcommand("score", "Score (instance, response) pairs");
  score->add_option("--in", in_path)->required();
  score->add_option("--out", out_path)->required();
  score->add_option("--stage", stage_arg, "stage1|stage2|vanilla");
  score->add_option("--stage-config", stage_config, "stage/weight config JSON");
  score->add_option("--judge", judge_spec, "mock or judge config JSON path");

  auto* passrate = app.add_subcommand("passrate", "Measure per-instance pass rates");
  passrate->add_option("--in", in_path)->required();
  passrate->add_option("--out", out_path)->required();
  passrate->add_option("--k", k, "rollouts per instance")->required();
  passrate->add_option("--policy", policy_spec,
                       "mock-always|mock-never|mock-alternating|config JSON")
      ->required();

  auto* reform = app.add_subcommand("reformulate", "Deconstruct and regroup MCQs");
  reform->add_option("--in", in_path)->required();
  reform->add_option("--out", out_path)->required();
  reform->add_option("--alpha", alpha);
  reform->add_option("--group-size", group_size);
  reform->add_option("--step", step)->required();
  reform->add_option("--seed", seed)->required();
  reform->add_option("--templates", templates_path, "stem templates file");
  reform->add_option("--judge-config", judge_spec, "mock or judge config JSON");
  reform->add_option("--remainder", remainder)
      ->check(CLI::IsMember({"drop", "short"}));
  reform->add_option("--separator", separator);

  auto* analyze = app.add_subcommand("analyze", "Compute metrics from scored records");
  analyze->add_option("--records", records_path)->required();
  analyze->add_option("--out", out_path, "CSV report path");
  analyze->add_flag("--dynamics", dynamics, "group records by their step field");

  auto* simulate = app.add_subcommand("simulate", "Run the training-dynamics simulator");
  simulate->add_option("--scenario", scenario)
      ->check(CLI::IsMember({"pilot", "hacking", "clarity"}));
  simulate->add_option("--config", sim_config_path, "sim config JSON");
  simulate->add_option("--seed", seed)->required();
  simulate->add_option("--out", out_path)->required();
  simulate->add_flag("--vanilla", vanilla, "answer-only reward, no stages");

  auto* serve = app.add_subcommand("serve", "Run the HTTP reward service");
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--stage-config", stage_config);
  serve->add_option("--judge", judge_spec, "mock or judge config JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (score->parsed())
      return cmd_score(in_path, out_path, stage_arg, stage_config, judge_spec);
    if (passrate->parsed()) return cmd_passrate(in_path, out_path, k, policy_spec);
    if (reform->parsed())
      return cmd_reformulate(in_path, out_path, alpha, group_size, step, seed,
                             templates_path, judge_spec, remainder, separator);
    if (analyze->parsed()) return cmd_analyze(records_path, out_path, dynamics);
    if (simulate->parsed())
      return cmd_simulate(scenario, sim_config_path, seed, out_path, vanilla);
    if (serve->parsed()) return cmd_serve(bind, stage_config, judge_spec);
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
