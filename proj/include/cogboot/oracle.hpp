#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/action.hpp"
#include "cogboot/memory.hpp"
#include "cogboot/tasking.hpp"

namespace cogboot {

enum class PromptKind { ActionSelect, DescribeRule, GenerateRuleDSL, RepairRule, Critic, KnowledgeQuery };

std::string_view to_string(PromptKind k);
PromptKind prompt_kind_from_string(std::string_view s);

struct PromptBundle {
  PromptKind kind = PromptKind::ActionSelect;
  std::string system;
  std::string user;
  /// Structured description of the situation the prompt was built from.
  /// Only scripted backends look at it; it is never sent over the wire.
  nlohmann::json situation = nlohmann::json::object();
};

struct OracleResponse {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t response_tokens = 0;
};

/// ceil(code points / 4).
std::size_t count_tokens(std::string_view text);

class OracleBackend {
 public:
  virtual ~OracleBackend() = default;
  virtual std::string complete(const PromptBundle& prompt) = 0;
  virtual bool available() const { return true; }
};

/// Stands in when the oracle is switched off; every call fails with OracleUnavailable.
class DisabledOracle : public OracleBackend {
 public:
  std::string complete(const PromptBundle& prompt) override;
  bool available() const override { return false; }
};

/// Deterministic fixture-driven backend. Fixtures are matched in file order on
/// (kind, signature); signature fields are `key=glob` pairs joined by ';' and a
/// missing key matches anything. Responses may contain ${slot} placeholders.
class ScriptedOracle : public OracleBackend {
 public:
  struct Fixture {
    PromptKind kind;
    std::map<std::string, std::string> signature;
    std::string response;
  };

  explicit ScriptedOracle(std::vector<Fixture> fixtures);
  static ScriptedOracle from_json(const nlohmann::json& j);
  /// FixtureMiss when the file is missing.
  static ScriptedOracle load(const std::filesystem::path& path);

  std::string complete(const PromptBundle& prompt) override;

  /// Feature map and slot values derived from a prompt's situation.
  std::map<std::string, std::string> features(const PromptBundle& prompt) const;
  std::map<std::string, std::string> slots(const PromptBundle& prompt) const;

  std::size_t size() const { return fixtures_.size(); }

 private:
  bool knows_storage(const std::string& object_type, const std::string& receptacle_type) const;
  std::vector<Fixture> fixtures_;
};

struct HttpOracleConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4-0613";
  std::string api_key_env = "COGBOOT_API_KEY";
  std::chrono::seconds timeout{60};
  int retries = 2;
};

/// Chat-completions client; temperature is always 0.
class HttpOracle : public OracleBackend {
 public:
  explicit HttpOracle(HttpOracleConfig config);
  std::string complete(const PromptBundle& prompt) override;
  static nlohmann::json request_body(const PromptBundle& prompt, const std::string& model);

 private:
  HttpOracleConfig config_;
};

struct CallRecord {
  PromptKind kind;
  std::size_t prompt_tokens;
  std::size_t response_tokens;
  std::uint64_t ts;
};

/// Front door to a backend: counts tokens, keeps the call log and answers
/// world-knowledge questions.
class OracleClient : public KnowledgeOracle {
 public:
  explicit OracleClient(std::unique_ptr<OracleBackend> backend);

  OracleResponse complete(const PromptBundle& prompt);
  bool ask_yes_no(const std::string& canonical_statement) override;
  bool available() const { return backend_->available(); }

  const std::vector<CallRecord>& calls() const { return calls_; }
  std::size_t total_tokens() const;
  std::size_t call_count(std::optional<PromptKind> kind = std::nullopt) const;
  /// Marks the current position; tokens_since/calls_since measure from it.
  std::size_t mark() const { return calls_.size(); }
  std::size_t tokens_since(std::size_t mark) const;

  std::string calls_jsonl() const;

 private:
  std::unique_ptr<OracleBackend> backend_;
  std::vector<CallRecord> calls_;
};

// ---- prompts ----

struct HistoryEntry {
  std::uint64_t time;
  std::string option;
  std::string purpose;
};

std::string action_system_prompt();

PromptBundle build_action_prompt(const std::string& task, const std::string& family, const BindingSet& bindings,
                                 const KnowledgeSnapshot& snapshot, const std::vector<std::string>& options,
                                 const std::vector<std::string>& blacklist, const std::vector<HistoryEntry>& history,
                                 const EndConditionRegistry& trained);

/// Continues the action-selection exchange asking for a rule in English.
PromptBundle build_description_prompt(const PromptBundle& action_prompt, const std::string& action_response);

/// Asks for the DSL form of a generalized rule.
PromptBundle build_rule_prompt(const PromptBundle& action_prompt, const std::string& description,
                               const std::string& correspondence);

PromptBundle build_repair_prompt(const PromptBundle& action_prompt, const std::string& source,
                                 const std::string& expected_option, const std::string& failure);

struct CriticRule {
  std::string id;
  std::string description;
};

PromptBundle build_critic_prompt(const std::string& family, const std::vector<CriticRule>& rules);

PromptBundle build_knowledge_prompt(const std::string& canonical_statement);

/// Renders the knowledge sections shared by several prompts.
std::string render_spatial_knowledge(const KnowledgeSnapshot& snapshot);
std::string render_object_knowledge(const KnowledgeSnapshot& snapshot);

// ---- parsers ----

/// "[Name]" headed sections; body is the trimmed text until the next header.
std::map<std::string, std::string> parse_sections(std::string_view text);

struct ActionChoice {
  std::string option;  // canonical option text of the chosen action
  std::string purpose;
  ActionCommand command;
};

/// MissingSection; OptionNotOffered when the suggestion is not among `options`
/// (subtask entries with variables accept any matching instance).
ActionChoice parse_action_response(std::string_view text, const std::vector<std::string>& options);

struct RuleDescription {
  std::string specific;
  std::string generalized;
  std::string correspondence;
};

RuleDescription parse_description(std::string_view text);

/// First fenced block; NoCodeBlock if none.
std::string parse_rule(std::string_view text);

enum class VerdictKind { Keep, Modify, Remove };

struct Verdict {
  std::string rule_id;
  VerdictKind kind = VerdictKind::Keep;
  std::string new_description;
};

struct CriticResult {
  std::string end_condition;
  std::vector<Verdict> verdicts;
};

/// MissingEndCondition; VerdictCountMismatch unless exactly one verdict per rule id.
CriticResult parse_critic(std::string_view text, const std::vector<std::string>& rule_ids);

/// UnparsableResponse when neither yes nor no can be read.
bool parse_yes_no(std::string_view text);

}  // namespace cogboot
