#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cogboot/agent.hpp"
#include "cogboot/error.hpp"
#include "cogboot/evaluation.hpp"
#include "cogboot/io.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/production.hpp"
#include "cogboot/scenario.hpp"
#include "cogboot/tasking.hpp"
#include "cogboot/text.hpp"

namespace fs = std::filesystem;
using namespace cogboot;
using nlohmann::json;

namespace {

const fs::path kData = COGBOOT_DATA_DIR;

struct Flags {
  std::string scenario;
  std::string curriculum = (kData / "curriculum.txt").string();
  std::string oracle = "scripted";
  std::string fixtures = (kData / "fixtures" / "scripted_oracle.json").string();
  std::string endpoint;
  std::uint64_t seed = 0;
  std::size_t max_steps = 50;
  std::string mode = "bootstrapped";
  std::string out;
  std::string format = "text";
  std::string run;
  std::string task;
  std::vector<std::string> manifests;
  bool verbose = false;
};

void add_shared(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "Floor plan JSON");
  cmd->add_option("--curriculum", f.curriculum, "Curriculum file")->capture_default_str();
  cmd->add_option("--oracle", f.oracle, "Oracle backend")
      ->check(CLI::IsMember({"scripted", "http"}))
      ->capture_default_str();
  cmd->add_option("--fixtures", f.fixtures, "Scripted oracle fixtures")->capture_default_str();
  cmd->add_option("--endpoint", f.endpoint, "Chat-completions endpoint for --oracle http");
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--max-steps", f.max_steps, "Decision limit per task")->capture_default_str();
  cmd->add_option("--mode", f.mode, "Agent mode")
      ->check(CLI::IsMember({"bootstrapped", "action-only"}))
      ->capture_default_str();
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--format", f.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  cmd->add_flag("-v,--verbose", f.verbose, "Log progress to stderr");
}

BackendFactory backend_factory(const Flags& f) {
  if (f.oracle == "scripted") {
    auto scripted = std::make_shared<ScriptedOracle>(ScriptedOracle::load(f.fixtures));
    return [scripted] { return std::make_unique<ScriptedOracle>(*scripted); };
  }
  HttpOracleConfig config;
  if (!f.endpoint.empty()) config.endpoint = f.endpoint;
  return [config] { return std::make_unique<HttpOracle>(config); };
}

Curriculum curriculum(const Flags& f) { return load_curriculum(f.curriculum); }

void emit(const Flags& f, const std::string& text_form, const json& json_form) {
  if (f.format == "json") {
    std::cout << json_form.dump(2) << "\n";
  } else {
    std::cout << text_form;
  }
}

int cmd_bootstrap(const Flags& f) {
  const auto plan = load_scenario(f.scenario.empty() ? kData / "scenarios" / "train.json" : fs::path(f.scenario));
  const auto families = curriculum(f);
  const fs::path out = f.out.empty() ? fs::path("runs/latest") : fs::path(f.out);
  OracleClient oracle(backend_factory(f)());
  RunState state;
  TraceSink sink;
  BootstrapConfig config;
  config.agent.seed = f.seed;
  config.agent.max_steps_per_task = f.max_steps;
  config.agent.max_total_steps = f.max_steps * 10;

  std::vector<FamilyReport> reports;
  int status = 0;
  std::string failure;
  try {
    reports = bootstrap(families, plan, state, oracle, config, sink);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BootstrapStalled) throw;
    failure = e.what();
    status = 3;
  }
  state.save(out);
  io::write_text(out / "trace.jsonl", sink.records_jsonl());
  io::write_text(out / "transitions.jsonl", sink.transitions_jsonl());
  io::write_text(out / "oracle_calls.jsonl", oracle.calls_jsonl());

  json report = json::array();
  std::string text;
  for (const auto& r : reports) {
    report.push_back({{"family", r.family},
                      {"instances", r.instances},
                      {"rules", r.rules},
                      {"end_condition", r.end_condition},
                      {"converged_on", r.witnesses}});
    text += r.family + ": " + std::to_string(r.instances) + " instances, " + std::to_string(r.rules) + " rules\n";
    text += "  end condition: " + r.end_condition + "\n";
  }
  const json summary{{"families", report},
                     {"oracle_calls", oracle.call_count()},
                     {"tokens", oracle.total_tokens()},
                     {"error", failure.empty() ? json(nullptr) : json(failure)}};
  io::write_json(out / "bootstrap.json", summary);
  text += "oracle calls: " + std::to_string(oracle.call_count()) + ", tokens: " +
          std::to_string(oracle.total_tokens()) + "\nrun directory: " + out.string() + "\n";
  if (!failure.empty()) text += "error: " + failure + "\n";
  emit(f, text, summary);
  return status;
}

std::vector<fs::path> manifest_paths(const Flags& f) {
  std::vector<fs::path> paths;
  for (const auto& m : f.manifests) paths.emplace_back(m);
  if (paths.empty()) {
    for (const auto& e : fs::directory_iterator(kData / "manifests")) {
      if (e.path().extension() == ".json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end(), [](const fs::path& a, const fs::path& b) {
      return a.filename().string() < b.filename().string();
    });
  }
  return paths;
}

int cmd_eval(const Flags& f) {
  const auto mode = agent_mode_from_string(f.mode);
  RunState trained;
  if (mode == AgentMode::Bootstrapped) {
    if (f.run.empty()) throw Error(ErrorCode::IoError, "--run <dir> is required in bootstrapped mode");
    trained = RunState::load(f.run);
  } else if (!f.run.empty()) {
    // subtask entries in the prompt come from the trained end conditions
    trained.end_conditions = RunState::load(f.run).end_conditions;
  }
  const auto families = curriculum(f);
  EvalOptions options;
  options.mode = mode;
  options.seed = f.seed;
  options.max_steps = f.max_steps;
  if (!f.scenario.empty()) options.plan_override = load_scenario(f.scenario);
  const auto factory = backend_factory(f);

  TraceSink sink;
  std::vector<MetricsRow> rows;
  json trials = json::array();
  for (const auto& path : manifest_paths(f)) {
    const auto manifest = EvalManifest::load(path);
    const auto results = run_manifest(manifest, families, trained, factory, options, &sink);
    rows.push_back(summarize(manifest.family, mode, results));
    for (const auto& r : results) {
      trials.push_back({{"family", r.family},
                        {"task", r.task},
                        {"entry", r.entry},
                        {"trial", r.trial},
                        {"success", r.success},
                        {"score", r.score},
                        {"steps", r.steps},
                        {"oracle_calls", r.oracle_calls},
                        {"tokens", r.tokens},
                        {"success_without_llm", r.success_without_llm ? json(*r.success_without_llm) : json(nullptr)}});
    }
  }
  const auto metrics = metrics_json(rows);
  const fs::path out = !f.out.empty() ? fs::path(f.out) : !f.run.empty() ? fs::path(f.run) : fs::path("runs/eval");
  const std::string suffix = mode == AgentMode::Bootstrapped ? "bootstrapped" : "action_only";
  io::write_json(out / ("metrics_" + suffix + ".json"), metrics);
  io::write_text(out / ("metrics_" + suffix + ".txt"), render_metrics_table(rows));
  io::write_json(out / ("trials_" + suffix + ".json"), trials);
  io::write_text(out / ("eval_trace_" + suffix + ".jsonl"), sink.records_jsonl());
  emit(f, render_metrics_table(rows), metrics);
  return 0;
}

int cmd_run(const Flags& f) {
  if (f.task.empty()) throw Error(ErrorCode::SchemaError, "--task is required");
  const auto mode = agent_mode_from_string(f.mode);
  const auto plan = load_scenario(f.scenario.empty() ? kData / "scenarios" / "test.json" : fs::path(f.scenario));
  const auto families = curriculum(f);
  RunState state = f.run.empty() ? RunState{} : RunState::load(f.run);
  const auto family = family_of(f.task, families);
  if (!family) throw Error(ErrorCode::UnknownFamily, "no curriculum family matches '" + f.task + "'");
  const auto task = make_task(*family, *match_task(*family, f.task));

  Simulator sim(plan);
  OracleClient oracle(backend_factory(f)());
  TraceSink sink;
  AgentConfig config;
  config.mode = mode;
  config.seed = f.seed;
  config.max_steps_per_task = f.max_steps;
  config.max_total_steps = f.max_steps * 10;
  Agent agent(config, state, oracle, sim, families, sink);
  const auto r = agent.run_task(task);
  const auto goal = check_goal(sim, task, r.forced ? TaskOutcome::Pending : r.outcome);

  std::string text;
  for (const auto& rec : sink.records) {
    if (rec.value("type", "") != "step") continue;
    text += "[" + std::to_string(rec["t"].get<std::uint64_t>()) + "] " + rec["task"].get<std::string>() + " | " +
            rec["action"].get<std::string>() + " (" + rec["source"].get<std::string>() + ", " +
            rec["result"].get<std::string>() + ")\n";
  }
  const std::string outcome = r.outcome == TaskOutcome::Done ? "done" : "quit";
  text += "outcome: " + outcome + (r.forced ? " (forced: " + r.failure + ")" : "") +
          "\nsuccess: " + (goal.success ? "yes" : "no") + "\nsteps: " + std::to_string(r.steps) +
          "\noracle calls: " + std::to_string(r.oracle_calls) + ", tokens: " + std::to_string(r.tokens) + "\n";
  const json summary{{"task", task.text},     {"outcome", outcome},     {"forced", r.forced},
                     {"success", goal.success}, {"score", goal.score},   {"steps", r.steps},
                     {"oracle_calls", r.oracle_calls}, {"tokens", r.tokens}};
  if (!f.out.empty()) {
    io::write_text(fs::path(f.out) / "trace.jsonl", sink.records_jsonl());
    io::write_text(fs::path(f.out) / "transitions.jsonl", sink.transitions_jsonl());
    io::write_text(fs::path(f.out) / "oracle_calls.jsonl", oracle.calls_jsonl());
  }
  emit(f, text, summary);
  return 0;
}

int cmd_export_tree(const Flags& f) {
  if (f.run.empty()) throw Error(ErrorCode::IoError, "--run <dir> is required");
  const auto state = RunState::load(f.run);
  const fs::path out = f.out.empty() ? fs::path(f.run) / "trees" : fs::path(f.out);
  json written = json::array();
  std::string text;
  for (const auto& family : curriculum(f)) {
    const auto key = family_key(family);
    try {
      const auto tree = export_decision_tree(state.rules.for_family(family), state.utilities);
      const auto path = out / (key + ".dot");
      io::write_text(path, tree.to_dot());
      written.push_back({{"family", family.text()}, {"file", path.string()}, {"leaves", tree.leaf_count()}});
      text += key + ": " + std::to_string(tree.leaf_count()) + " leaves -> " + path.string() + "\n";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyRuleSet) throw;
      spdlog::warn("no rules for '{}'; tree skipped", family.text());
      text += key + ": no rules\n";
    }
  }
  emit(f, text, json{{"trees", written}});
  return 0;
}

int cmd_inspect(const Flags& f) {
  if (f.run.empty()) throw Error(ErrorCode::IoError, "--run <dir> is required");
  const auto state = RunState::load(f.run);
  json rules = json::array();
  std::string text = "[World Knowledge]\n";
  for (const auto& [stmt, value] : state.kb.entries()) text += "  " + stmt + ": " + (value ? "yes" : "no") + "\n";
  text += "[Rules]\n";
  for (const auto& stored : state.rules.rules()) {
    const auto& r = stored.rule;
    const auto u = state.utilities.get(r.id);
    rules.push_back({{"id", r.id},
                     {"task", r.task_pattern.text()},
                     {"utility", u.utility},
                     {"applications", u.applications},
                     {"description", r.description}});
    text += "  " + r.id + "  U=" + text::format_fixed(u.utility, 4) + " N=" + std::to_string(u.applications) +
            "  [" + r.task_pattern.text() + "] " + r.description + "\n";
  }
  text += "[End Conditions]\n";
  for (const auto& [family, sentence] : state.end_conditions.entries()) text += "  " + family + ": " + sentence + "\n";
  emit(f, text, json{{"world_kb", state.kb.to_json()}, {"rules", rules}, {"end_conditions", state.end_conditions.to_json()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("cogboot"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Bootstrapped production-rule agent for a kitchen gridworld"};
  app.require_subcommand(1);
  Flags f;

  auto* boot = app.add_subcommand("bootstrap", "Learn productions on the training plan");
  add_shared(boot, f);

  auto* eval = app.add_subcommand("eval", "Run the evaluation manifests and report metrics");
  add_shared(eval, f);
  eval->add_option("--run", f.run, "Run directory from bootstrap");
  eval->add_option("--manifest", f.manifests, "Manifest file (repeatable; default: bundled manifests)");

  auto* run = app.add_subcommand("run", "Run one task and print its trace");
  add_shared(run, f);
  run->add_option("--run", f.run, "Run directory with trained state");
  run->add_option("--task", f.task, "Task text")->required();

  auto* tree = app.add_subcommand("export-tree", "Write one DOT decision tree per family");
  add_shared(tree, f);
  tree->add_option("--run", f.run, "Run directory")->required();

  auto* inspect = app.add_subcommand("inspect-kb", "Print world knowledge, rules and end conditions");
  add_shared(inspect, f);
  inspect->add_option("--run", f.run, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);
  if (f.verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (boot->parsed()) return cmd_bootstrap(f);
    if (eval->parsed()) return cmd_eval(f);
    if (run->parsed()) return cmd_run(f);
    if (tree->parsed()) return cmd_export_tree(f);
    if (inspect->parsed()) return cmd_inspect(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
