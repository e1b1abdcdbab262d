#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/learning.hpp"
#include "cogboot/memory.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/production.hpp"
#include "cogboot/simulator.hpp"
#include "cogboot/tasking.hpp"

namespace cogboot {

enum class AgentMode { Bootstrapped, ActionOnly };

std::string_view to_string(AgentMode m);
AgentMode agent_mode_from_string(std::string_view s);

struct AgentConfig {
  AgentMode mode = AgentMode::Bootstrapped;
  bool training = false;  // learn productions and reinforce utilities
  std::size_t max_steps_per_task = 50;
  std::size_t max_total_steps = 500;
  int llm_action_retries = 3;
  int rule_repair_attempts = 3;
  std::size_t history_window = 20;
  LearningConfig learning;
  std::uint64_t seed = 0;
};

/// A learned rule plus what is needed to re-verify it later.
struct StoredRule {
  ProductionRule rule;
  std::optional<KnowledgeSnapshot> generation_snapshot;
  std::optional<PromptBundle> action_prompt;
  std::optional<ActionCommand> expected_action;
};

class ProceduralMemory {
 public:
  /// Returns the id actually used (a numeric suffix is added on collision).
  std::string add(StoredRule rule);
  void replace(const std::string& id, ProductionRule rule);
  void remove(const std::string& id);
  const StoredRule* find(const std::string& id) const;
  const std::vector<StoredRule>& rules() const { return rules_; }
  std::vector<ProductionRule> for_family(const TaskPattern& family) const;
  std::size_t size() const { return rules_.size(); }

 private:
  std::vector<StoredRule> rules_;
};

/// Everything that persists across tasks: procedural and declarative memory,
/// utilities and the critic's end conditions.
struct RunState {
  ProceduralMemory rules;
  UtilityStore utilities;
  EndConditionRegistry end_conditions;
  WorldKnowledgeBase kb;

  /// rules/*.prod, utilities.json, end_conditions.json, kb.json; missing files load empty.
  void save(const std::filesystem::path& dir) const;
  static RunState load(const std::filesystem::path& dir);
};

/// Append-only record of everything the agent does, with a strictly
/// increasing logical time shared by all records.
struct TraceSink {
  std::vector<nlohmann::json> records;
  std::vector<nlohmann::json> transitions;
  std::uint64_t t = 0;

  void add(nlohmann::json record);
  void add_transition(const Edge& e);
  std::string records_jsonl() const;
  std::string transitions_jsonl() const;
};

struct EpisodeResult {
  TaskInstance task;
  TaskOutcome outcome = TaskOutcome::Pending;
  bool forced = false;  // ended by a limit or failure rather than a choice
  std::string failure;
  std::size_t steps = 0;
  std::size_t oracle_calls = 0;
  std::size_t tokens = 0;
  std::size_t rules_learned = 0;
};

class Agent {
 public:
  Agent(AgentConfig config, RunState& state, OracleClient& oracle, Simulator& sim, std::vector<TaskPattern> families,
        TraceSink& sink);

  /// Pushes the root task and observes the start state.
  void begin(const TaskInstance& task);
  /// One decision; false once the task stack is empty.
  bool step();
  EpisodeResult run_task(const TaskInstance& task);

  void integrate(const Observation& obs) { memory_.integrate_observation(obs); }
  /// The action-selection prompt the agent would send right now.
  PromptBundle current_action_prompt() const;

  const EnvironmentMemory& memory() const { return memory_; }
  const TaskStack& stack() const { return stack_; }
  const EpisodeResult& result() const { return result_; }

 private:
  struct Activation {
    TaskInstance task;
    TransitionGraph graph;
    std::shared_ptr<TaskTrace> trace;
    std::vector<std::string> blacklist;
    std::size_t steps = 0;
    bool cycle_pending = false;
    std::string initiating_rule;
    std::string initiating_option;
    StateId parent_from;
  };

  struct Decision {
    std::string rule;  // empty for oracle decisions without a learned rule
    std::string option;
    std::string purpose;
    ActionCommand action;
    bool from_oracle = false;
    bool executed = false;  // motor action already run during oracle retries
    std::optional<StepResult> result;
  };

  KnowledgeSnapshot snapshot() const;
  std::optional<Decision> rule_decision(const KnowledgeSnapshot& snap);
  std::optional<Decision> oracle_decision(const KnowledgeSnapshot& snap, StateId state);
  std::optional<std::string> learn_production(const PromptBundle& prompt, const std::string& response,
                                              const KnowledgeSnapshot& snap, const ActionChoice& choice);
  void execute(Decision d, StateId state);
  void record_edge(Activation& act, StateId from, const std::string& rule, StateId to,
                   std::shared_ptr<TaskTrace> subtask, const std::string& option);
  void finish(TaskOutcome outcome, StateId state, const std::string& rule, bool forced, const std::string& why);
  void abort_all(const std::string& why);
  void sync_oracle_log();
  void log_step(const KnowledgeSnapshot& snap, StateId state, const Decision& d, const std::string& result);
  std::optional<TaskPattern> family_for(const std::string& task) const;
  PromptBundle action_prompt(const KnowledgeSnapshot& snap, const OptionList& options) const;

  AgentConfig config_;
  RunState& state_;
  OracleClient& oracle_;
  Simulator& sim_;
  std::vector<TaskPattern> families_;
  TraceSink& sink_;
  Rng rng_;

  EnvironmentMemory memory_;
  TaskStack stack_;
  std::vector<Activation> activations_;
  std::vector<HistoryEntry> history_;
  std::uint64_t time_ = 0;
  std::size_t total_steps_ = 0;
  std::size_t logged_calls_ = 0;
  std::size_t calls_at_start_ = 0;
  EpisodeResult result_;
};

struct FamilyReport {
  std::string family;
  std::size_t instances = 0;
  std::size_t rules = 0;
  std::string end_condition;
  std::vector<std::string> witnesses;  // the K oracle-free instances
};

struct BootstrapConfig {
  AgentConfig agent;
  std::size_t convergence_k = 3;
  std::size_t stall_limit = 25;
};

/// Runs the curriculum on the training plan, learning productions until each
/// family completes K consecutive instances without any oracle call, then
/// asks the critic for its end condition. BootstrapStalled after the limit.
std::vector<FamilyReport> bootstrap(const Curriculum& curriculum, const FloorPlan& plan, RunState& state,
                                    OracleClient& oracle, const BootstrapConfig& config, TraceSink& sink);

/// Applies the critic's verdicts for one family and stores its end condition.
void critic_pass(const TaskPattern& family, RunState& state, OracleClient& oracle);

}  // namespace cogboot
