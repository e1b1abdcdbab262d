#include "cogboot/agent.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "cogboot/error.hpp"
#include "cogboot/io.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

namespace {

bool listed(const std::vector<std::string>& list, const std::string& option) {
  return std::any_of(list.begin(), list.end(), [&](const std::string& s) { return text::iequals(s, option); });
}

void add_unique(std::vector<std::string>& list, const std::string& option) {
  if (!option.empty() && !listed(list, option)) list.push_back(option);
}

bool fatal(const Error& e) {
  return e.code() == ErrorCode::FixtureMiss || e.code() == ErrorCode::OracleUnavailable;
}

}  // namespace

std::string_view to_string(AgentMode m) {
  return m == AgentMode::Bootstrapped ? "bootstrapped" : "action-only";
}

AgentMode agent_mode_from_string(std::string_view s) {
  if (text::iequals(s, "bootstrapped")) return AgentMode::Bootstrapped;
  if (text::iequals(s, "action-only") || text::iequals(s, "action_only")) return AgentMode::ActionOnly;
  throw Error(ErrorCode::SchemaError, "unknown mode '" + std::string(s) + "'");
}

// ---- procedural memory ----

std::string ProceduralMemory::add(StoredRule rule) {
  for (const auto& existing : rules_) {
    ProductionRule probe = rule.rule;
    probe.id = existing.rule.id;
    if (probe == existing.rule) return existing.rule.id;
  }
  const std::string base = rule.rule.id;
  std::string id = base;
  for (int n = 2; find(id) != nullptr; ++n) id = base + "_" + std::to_string(n);
  rule.rule.id = id;
  rules_.push_back(std::move(rule));
  return id;
}

void ProceduralMemory::replace(const std::string& id, ProductionRule rule) {
  for (auto& r : rules_) {
    if (r.rule.id == id) {
      rule.id = id;
      r.rule = std::move(rule);
      return;
    }
  }
  throw Error(ErrorCode::DanglingReference, "no rule '" + id + "'");
}

void ProceduralMemory::remove(const std::string& id) {
  std::erase_if(rules_, [&](const StoredRule& r) { return r.rule.id == id; });
}

const StoredRule* ProceduralMemory::find(const std::string& id) const {
  for (const auto& r : rules_) {
    if (r.rule.id == id) return &r;
  }
  return nullptr;
}

std::vector<ProductionRule> ProceduralMemory::for_family(const TaskPattern& family) const {
  std::vector<ProductionRule> out;
  for (const auto& r : rules_) {
    if (text::iequals(r.rule.task_pattern.text(), family.text())) out.push_back(r.rule);
  }
  return out;
}

// ---- run state ----

void RunState::save(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::remove_all(dir / "rules", ec);
  fs::create_directories(dir / "rules");
  for (const auto& r : rules.rules()) io::write_text(dir / "rules" / (r.rule.id + ".prod"), serialize_production(r.rule));
  io::write_json(dir / "utilities.json", utilities.to_json());
  io::write_json(dir / "end_conditions.json", end_conditions.to_json());
  io::write_json(dir / "kb.json", kb.to_json());
}

RunState RunState::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "no run directory " + dir.string());
  RunState s;
  std::vector<fs::path> files;
  if (fs::is_directory(dir / "rules")) {
    for (const auto& entry : fs::directory_iterator(dir / "rules")) {
      if (entry.path().extension() == ".prod") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) s.rules.add(StoredRule{parse_production(io::read_text(f)), {}, {}, {}});
  if (fs::exists(dir / "utilities.json")) s.utilities = UtilityStore::from_json(io::read_json(dir / "utilities.json"));
  if (fs::exists(dir / "end_conditions.json")) {
    s.end_conditions = EndConditionRegistry::from_json(io::read_json(dir / "end_conditions.json"));
  }
  if (fs::exists(dir / "kb.json")) s.kb = WorldKnowledgeBase::from_json(io::read_json(dir / "kb.json"));
  return s;
}

// ---- trace ----

void TraceSink::add(nlohmann::json record) {
  record["t"] = t++;
  records.push_back(std::move(record));
}

void TraceSink::add_transition(const Edge& e) { transitions.push_back(edge_to_json(t++, e)); }

namespace {
std::string to_jsonl(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}
}  // namespace

std::string TraceSink::records_jsonl() const { return to_jsonl(records); }
std::string TraceSink::transitions_jsonl() const { return to_jsonl(transitions); }

// ---- agent ----

Agent::Agent(AgentConfig config, RunState& state, OracleClient& oracle, Simulator& sim,
             std::vector<TaskPattern> families, TraceSink& sink)
    : config_(config),
      state_(state),
      oracle_(oracle),
      sim_(sim),
      families_(std::move(families)),
      sink_(sink),
      rng_(config.seed),
      logged_calls_(oracle.calls().size()),
      calls_at_start_(oracle.mark()) {}

void Agent::begin(const TaskInstance& task) {
  if (stack_.push(task) != PushResult::Pushed) throw Error(ErrorCode::SchemaError, "cannot start '" + task.text + "'");
  Activation root;
  root.task = task;
  root.trace = std::make_shared<TaskTrace>();
  root.trace->task = task.text;
  activations_.push_back(std::move(root));
  memory_.integrate_observation(sim_.observe());
  result_ = EpisodeResult{};
  result_.task = task;
  calls_at_start_ = oracle_.mark();
  sink_.add({{"type", "begin"}, {"task", task.text}, {"mode", to_string(config_.mode)}});
}

KnowledgeSnapshot Agent::snapshot() const { return memory_.snapshot(activations_.back().task.text); }

PromptBundle Agent::action_prompt(const KnowledgeSnapshot& snap, const OptionList& options) const {
  const auto& act = activations_.back();
  const std::size_t keep = std::min(history_.size(), config_.history_window);
  std::vector<HistoryEntry> recent(history_.end() - static_cast<std::ptrdiff_t>(keep), history_.end());
  return build_action_prompt(act.task.text, act.task.family.text(), act.task.bindings, snap, options.options,
                             options.blacklisted, recent, state_.end_conditions);
}

PromptBundle Agent::current_action_prompt() const {
  if (activations_.empty()) throw Error(ErrorCode::EmptyStack, "no active task");
  const auto snap = snapshot();
  return action_prompt(snap, list_options(snap, state_.end_conditions, activations_.back().blacklist));
}

void Agent::sync_oracle_log() {
  const auto& calls = oracle_.calls();
  for (; logged_calls_ < calls.size(); ++logged_calls_) {
    const auto& c = calls[logged_calls_];
    sink_.add({{"type", "oracle"},
               {"kind", to_string(c.kind)},
               {"prompt_tokens", c.prompt_tokens},
               {"response_tokens", c.response_tokens}});
  }
}

void Agent::log_step(const KnowledgeSnapshot& snap, StateId state, const Decision& d, const std::string& result) {
  sync_oracle_log();
  sink_.add({{"type", "step"},
             {"task", snap.current_task},
             {"depth", stack_.depth()},
             {"state", state.hex()},
             {"source", d.from_oracle ? "oracle" : "production"},
             {"rule", d.rule},
             {"action", d.option},
             {"result", result}});
}

std::optional<TaskPattern> Agent::family_for(const std::string& task) const { return family_of(task, families_); }

std::optional<Agent::Decision> Agent::rule_decision(const KnowledgeSnapshot& snap) {
  struct Candidate {
    const ProductionRule* rule;
    ActionCommand action;
  };
  const auto& act = activations_.back();
  MatchContext ctx{snap, state_.kb, &oracle_};
  std::vector<Candidate> applicable;
  for (const auto& stored : state_.rules.rules()) {
    const auto& rule = stored.rule;
    try {
      auto m = match(rule, ctx);
      if (!m.ok) continue;
      auto action = resolve_action(instantiate_effect(rule, m.bindings), snap);
      if (listed(act.blacklist, action.to_option())) continue;
      if (action.kind == ActionKind::AttendSubtask && text::iequals(action.target, act.task.text)) continue;
      applicable.push_back({&rule, std::move(action)});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OracleUnavailable && !oracle_.available()) continue;
      if (e.code() == ErrorCode::MissingBinding) continue;
      throw;
    }
  }
  if (applicable.empty()) return std::nullopt;
  const auto& pick = select(applicable, [](const Candidate& c) { return c.rule->id; }, state_.utilities, rng_);
  Decision d;
  d.rule = pick.rule->id;
  d.option = pick.action.to_option();
  d.purpose = pick.rule->description;
  d.action = pick.action;
  return d;
}

std::optional<Agent::Decision> Agent::oracle_decision(const KnowledgeSnapshot& snap, StateId state) {
  for (int attempt = 0; attempt < config_.llm_action_retries; ++attempt) {
    auto& act = activations_.back();
    const auto options = list_options(snap, state_.end_conditions, act.blacklist);
    const auto prompt = action_prompt(snap, options);
    const auto response = oracle_.complete(prompt);
    ActionChoice choice;
    try {
      choice = parse_action_response(response.text, options.options);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingSection && e.code() != ErrorCode::OptionNotOffered) throw;
      spdlog::warn("oracle answer rejected: {}", e.what());
      continue;
    }
    Decision d;
    d.option = choice.command.to_option();
    d.purpose = choice.purpose;
    d.action = choice.command;
    d.from_oracle = true;
    if (listed(act.blacklist, d.option)) continue;
    if (d.action.is_motor()) {
      auto r = sim_.step(d.action);
      if (const auto* err = std::get_if<AffordanceError>(&r)) {
        log_step(snap, state, d, std::string(to_string(err->code)));
        add_unique(act.blacklist, d.option);
        continue;
      }
      d.executed = true;
      d.result = std::move(r);
    }
    if (config_.training && config_.mode == AgentMode::Bootstrapped) {
      if (auto id = learn_production(prompt, response.text, snap, choice)) {
        d.rule = *id;
        if (const auto* stored = state_.rules.find(*id); stored && !stored->rule.description.empty()) {
          d.purpose = stored->rule.description;
        }
      }
    }
    return d;
  }
  if (config_.mode == AgentMode::ActionOnly) {
    throw Error(ErrorCode::ActionFailure, "no usable oracle action after " +
                                              std::to_string(config_.llm_action_retries) + " attempts");
  }
  return std::nullopt;
}

std::optional<std::string> Agent::learn_production(const PromptBundle& prompt, const std::string& response,
                                                   const KnowledgeSnapshot& snap, const ActionChoice& choice) {
  try {
    const auto description = parse_description(oracle_.complete(build_description_prompt(prompt, response)).text);
    std::string source =
        parse_rule(oracle_.complete(build_rule_prompt(prompt, description.generalized, description.correspondence)).text);
    MatchContext ctx{snap, state_.kb, &oracle_};
    for (int attempt = 1; attempt <= config_.rule_repair_attempts; ++attempt) {
      std::string failure;
      try {
        auto rule = parse_production(source);
        auto verdict = replay_verify(rule, ctx, choice.command);
        if (verdict.pass) {
          if (rule.description.empty()) rule.description = description.generalized;
          const std::string id = state_.rules.add(StoredRule{rule, snap, prompt, choice.command});
          state_.utilities.ensure(id);
          ++result_.rules_learned;
          sync_oracle_log();
          sink_.add({{"type", "learn"}, {"rule", id}, {"attempts", attempt}});
          return id;
        }
        failure = verdict.reason;
      } catch (const Error& e) {
        if (fatal(e)) throw;
        failure = e.what();
      }
      if (attempt == config_.rule_repair_attempts) break;
      source = parse_rule(oracle_.complete(build_repair_prompt(prompt, source, choice.option, failure)).text);
    }
    spdlog::warn("no rule stored for '{}'", choice.option);
  } catch (const Error& e) {
    if (fatal(e)) throw;
    spdlog::warn("rule learning failed: {}", e.what());
  }
  sync_oracle_log();
  sink_.add({{"type", "learn"}, {"rule", nullptr}, {"action", choice.option}});
  return std::nullopt;
}

void Agent::record_edge(Activation& act, StateId from, const std::string& rule, StateId to,
                        std::shared_ptr<TaskTrace> subtask, const std::string& option) {
  const bool cycle = to == from || act.graph.reachable(to, from);
  const Edge e{from, rule, to};
  act.graph.record(from, rule, to);
  act.trace->steps.push_back({e, std::move(subtask)});
  sink_.add_transition(e);
  if (cycle) {
    act.cycle_pending = true;
    add_unique(act.blacklist, option);
    sink_.add({{"type", "cycle"}, {"task", act.task.text}, {"action", option}});
  }
}

void Agent::execute(Decision d, StateId state) {
  const auto snap = snapshot();
  auto& act = activations_.back();
  const auto remember = [&] { history_.push_back({time_++, d.option, d.purpose}); };
  switch (d.action.kind) {
    case ActionKind::Done:
    case ActionKind::Quit: {
      const bool done = d.action.kind == ActionKind::Done;
      log_step(snap, state, d, done ? "done" : "quit");
      remember();
      finish(done ? TaskOutcome::Done : TaskOutcome::Quit, state, d.rule, false, "");
      return;
    }
    case ActionKind::AttendSubtask: {
      remember();
      auto family = family_for(d.action.target);
      if (!family) {
        log_step(snap, state, d, "unknown_family");
        add_unique(act.blacklist, d.option);
        return;
      }
      auto task = make_task(*family, *match_task(*family, d.action.target));
      if (stack_.push(task) != PushResult::Pushed) {
        log_step(snap, state, d, "rejected");
        add_unique(act.blacklist, d.option);
        return;
      }
      log_step(snap, state, d, "pushed");
      Activation child;
      child.task = task;
      child.trace = std::make_shared<TaskTrace>();
      child.trace->task = task.text;
      child.initiating_rule = d.rule;
      child.initiating_option = d.option;
      child.parent_from = state;
      activations_.push_back(std::move(child));
      return;
    }
    default: break;
  }
  StepResult r = d.executed ? std::move(*d.result) : sim_.step(d.action);
  if (const auto* err = std::get_if<AffordanceError>(&r)) {
    log_step(snap, state, d, std::string(to_string(err->code)));
    add_unique(act.blacklist, d.option);
    return;
  }
  log_step(snap, state, d, "ok");
  remember();
  memory_.integrate_observation(std::get<Observation>(r));
  record_edge(act, state, d.rule, fingerprint(snapshot()), nullptr, d.option);
}

void Agent::finish(TaskOutcome outcome, StateId state, const std::string& rule, bool forced, const std::string& why) {
  Activation act = std::move(activations_.back());
  activations_.pop_back();
  stack_.pop(outcome);
  memory_.record_task_outcome(act.task.text, outcome == TaskOutcome::Done);
  if (outcome == TaskOutcome::Done) {
    const Edge last{state, rule, kTerminalState};
    act.trace->steps.push_back({last, nullptr});
    sink_.add_transition(last);
    act.trace->end = TraceEnd::Done;
    if (config_.training && config_.mode == AgentMode::Bootstrapped) {
      try {
        auto pathways = split_pathways(*act.trace);
        if (!pathways.empty()) reinforce_trace(state_.utilities, pathways.front(), config_.learning);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Unreachable) throw;
        spdlog::warn("no pathway to reinforce for '{}'", act.task.text);
      }
    }
  } else {
    act.trace->end = TraceEnd::Quit;
  }
  sync_oracle_log();
  sink_.add({{"type", "finish"},
             {"task", act.task.text},
             {"outcome", outcome == TaskOutcome::Done ? "done" : "quit"},
             {"forced", forced},
             {"reason", why}});
  if (activations_.empty()) {
    result_.outcome = outcome;
    result_.forced = forced;
    result_.failure = why;
    return;
  }
  auto& parent = activations_.back();
  record_edge(parent, act.parent_from, act.initiating_rule, fingerprint(snapshot()), act.trace,
              act.initiating_option);
  if (outcome != TaskOutcome::Done) add_unique(parent.blacklist, act.initiating_option);
}

void Agent::abort_all(const std::string& why) {
  while (!activations_.empty()) finish(TaskOutcome::Quit, fingerprint(snapshot()), "", true, why);
}

bool Agent::step() {
  if (activations_.empty()) return false;
  sync_oracle_log();
  if (total_steps_ >= config_.max_total_steps) {
    abort_all("step limit for the episode reached");
    return false;
  }
  auto& act = activations_.back();
  const auto snap = snapshot();
  const auto state = fingerprint(snap);
  if (act.steps >= config_.max_steps_per_task) {
    finish(TaskOutcome::Quit, state, "", true, "step limit for '" + act.task.text + "' reached");
    return !activations_.empty();
  }
  std::optional<Decision> d;
  if (config_.mode == AgentMode::Bootstrapped && !act.cycle_pending) d = rule_decision(snap);
  activations_.back().cycle_pending = false;
  if (!d) {
    if (config_.mode == AgentMode::Bootstrapped && !oracle_.available()) {
      abort_all("no applicable production and the oracle is disabled");
      return false;
    }
    d = oracle_decision(snap, state);
  }
  if (!d) {
    finish(TaskOutcome::Quit, state, "", true, "oracle gave no usable action");
    return !activations_.empty();
  }
  ++activations_.back().steps;
  ++total_steps_;
  ++result_.steps;
  execute(std::move(*d), state);
  return !activations_.empty();
}

EpisodeResult Agent::run_task(const TaskInstance& task) {
  begin(task);
  try {
    while (step()) {
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ActionFailure && e.code() != ErrorCode::OracleUnavailable) throw;
    spdlog::warn("episode aborted: {}", e.what());
    abort_all(e.what());
  }
  sync_oracle_log();
  result_.oracle_calls = oracle_.calls().size() - calls_at_start_;
  result_.tokens = oracle_.tokens_since(calls_at_start_);
  return result_;
}

// ---- bootstrap ----

namespace {

TaskInstance draw_instance(const TaskPattern& family, const FloorPlan& plan, Rng& rng, std::set<std::string>& used) {
  TaskInstance task = instantiate_random(family, plan, rng.engine());
  for (int tries = 0; tries < 64 && used.count(text::to_lower(task.text)); ++tries) {
    task = instantiate_random(family, plan, rng.engine());
  }
  used.insert(text::to_lower(task.text));
  return task;
}

}  // namespace

void critic_pass(const TaskPattern& family, RunState& state, OracleClient& oracle) {
  const auto rules = state.rules.for_family(family);
  if (rules.empty()) return;
  std::vector<CriticRule> listing;
  std::vector<std::string> ids;
  for (const auto& r : rules) {
    listing.push_back({r.id, r.description});
    ids.push_back(r.id);
  }
  const auto result = parse_critic(oracle.complete(build_critic_prompt(family.text(), listing)).text, ids);
  for (const auto& v : result.verdicts) {
    if (v.kind == VerdictKind::Remove) {
      state.rules.remove(v.rule_id);
      state.utilities.erase(v.rule_id);
      continue;
    }
    if (v.kind != VerdictKind::Modify) continue;
    const StoredRule* stored = state.rules.find(v.rule_id);
    if (!stored || !stored->action_prompt || !stored->generation_snapshot || !stored->expected_action) continue;
    try {
      const auto source =
          parse_rule(oracle.complete(build_rule_prompt(*stored->action_prompt, v.new_description, "")).text);
      auto rule = parse_production(source);
      if (rule.description.empty()) rule.description = v.new_description;
      MatchContext ctx{*stored->generation_snapshot, state.kb, &oracle};
      if (replay_verify(rule, ctx, *stored->expected_action).pass) {
        state.rules.replace(v.rule_id, std::move(rule));
      } else {
        spdlog::warn("modified '{}' failed verification; kept the original", v.rule_id);
      }
    } catch (const Error& e) {
      if (fatal(e)) throw;
      spdlog::warn("could not modify '{}': {}", v.rule_id, e.what());
    }
  }
  state.end_conditions.set(family.text(), result.end_condition);
}

std::vector<FamilyReport> bootstrap(const Curriculum& curriculum, const FloorPlan& plan, RunState& state,
                                    OracleClient& oracle, const BootstrapConfig& config, TraceSink& sink) {
  Rng rng(config.agent.seed);
  std::vector<FamilyReport> reports;
  for (const auto& family : curriculum) {
    FamilyReport report;
    report.family = family.text();
    std::set<std::string> used;
    std::size_t consecutive = 0;
    while (consecutive < config.convergence_k) {
      if (report.instances >= config.stall_limit) {
        throw Error(ErrorCode::BootstrapStalled, "'" + family.text() + "' did not converge within " +
                                                     std::to_string(config.stall_limit) + " instances");
      }
      const auto task = draw_instance(family, plan, rng, used);
      AgentConfig ac = config.agent;
      ac.mode = AgentMode::Bootstrapped;
      ac.training = true;
      ac.seed = rng.next();
      Simulator sim(plan);
      sink.add({{"type", "instance"}, {"family", family.text()}, {"task", task.text}, {"index", report.instances}});
      const auto mark = oracle.mark();
      Agent agent(ac, state, oracle, sim, curriculum, sink);
      const auto r = agent.run_task(task);
      ++report.instances;
      const bool clean = r.outcome == TaskOutcome::Done && !r.forced && oracle.mark() == mark;
      spdlog::info("bootstrap {} #{}: {} ({} oracle calls)", family_key(family), report.instances, task.text,
                   oracle.mark() - mark);
      if (clean) {
        ++consecutive;
        report.witnesses.push_back(task.text);
      } else {
        consecutive = 0;
        report.witnesses.clear();
      }
    }
    const auto before_critic = oracle.mark();
    critic_pass(family, state, oracle);
    for (std::size_t i = before_critic; i < oracle.calls().size(); ++i) {
      const auto& c = oracle.calls()[i];
      sink.add({{"type", "oracle"},
                {"kind", to_string(c.kind)},
                {"prompt_tokens", c.prompt_tokens},
                {"response_tokens", c.response_tokens}});
    }
    report.rules = state.rules.for_family(family).size();
    report.end_condition = state.end_conditions.get(family.text()).value_or("");
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace cogboot
