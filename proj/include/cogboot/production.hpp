#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogboot/action.hpp"
#include "cogboot/learning.hpp"
#include "cogboot/memory.hpp"
#include "cogboot/tasking.hpp"

namespace cogboot {

/// Built-in variable bound to the receptacle the robot is facing.
inline constexpr const char* kLocationVar = "location";

/// A predicate or domain argument: a variable name or a quoted literal.
struct Arg {
  bool literal = false;
  std::string value;
  friend bool operator==(const Arg&, const Arg&) = default;
};

enum class DomainKind { Receptacles, UnexploredReceptacles, EmptyReceptacles, Objects, StorageOf };

struct Domain {
  DomainKind kind = DomainKind::Receptacles;
  std::optional<Arg> type;      // receptacles/objects: type filter
  std::optional<Arg> holding;   // receptacles holding an object
  std::optional<Arg> in;        // objects in a receptacle
  std::optional<Arg> of;        // storage of an object
  bool unexplored_only = false; // storage ... unexplored
  friend bool operator==(const Domain&, const Domain&) = default;
};

enum class Strategy { Nearest, First, Any };

struct BindingSelector {
  std::string var;
  Strategy strategy = Strategy::Nearest;
  Domain domain;
  friend bool operator==(const BindingSelector&, const BindingSelector&) = default;
};

enum class PredicateKind {
  GripperEmpty,
  Holding,
  Located,
  Unlocated,
  In,
  At,
  Explored,
  Unexplored,
  Empty,
  State,
  Has,
  WorldTrue,
  WorldFalse,
  Succeeded,
  Visible,
  Task,
  Exists,
  Not,
};

struct Predicate {
  PredicateKind kind = PredicateKind::GripperEmpty;
  std::vector<Arg> args;
  std::string word;              // level, open state or attribute
  std::string text;              // statement / task template
  std::optional<Domain> domain;  // Exists
  std::vector<Predicate> inner;  // Not: exactly one
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

enum class EffectKind { Motor, AttendSubtask, Done, Quit };

struct EffectTemplate {
  EffectKind kind = EffectKind::Done;
  std::string text;
  friend bool operator==(const EffectTemplate&, const EffectTemplate&) = default;
};

struct ProductionRule {
  std::string id;
  TaskPattern task_pattern;
  std::vector<BindingSelector> selectors;
  std::vector<Predicate> preconditions;
  EffectTemplate effect;
  std::string description;
  friend bool operator==(const ProductionRule& a, const ProductionRule& b) {
    return a.id == b.id && a.task_pattern == b.task_pattern && a.selectors == b.selectors &&
           a.preconditions == b.preconditions && a.effect == b.effect && a.description == b.description;
  }
};

/// ParseError (with line/column), UnboundVariable, UnknownPredicate.
ProductionRule parse_production(std::string_view source);
std::string serialize_production(const ProductionRule& rule);

std::string to_string(const Predicate& p);
std::string to_string(const BindingSelector& s);
std::string to_string(const Domain& d);

struct MatchContext {
  const KnowledgeSnapshot& snapshot;
  WorldKnowledgeBase& kb;
  KnowledgeOracle* oracle;  // null: unknown statements raise OracleUnavailable
};

enum class MatchStage { Task, Selector, Predicate, None };

struct MatchResult {
  bool ok = false;
  BindingSet bindings;  // partial when !ok
  std::string reason;
  MatchStage stage = MatchStage::None;
  std::size_t index = 0;
};

/// Task pattern, then selectors, then predicates, short-circuiting on the
/// first failure. Unknown world statements are resolved through the oracle;
/// an answer that is neither yes nor no fails with "got unknown statement".
MatchResult match(const ProductionRule& rule, const MatchContext& ctx);

/// Evaluates one predicate alone under the given bindings.
bool evaluate_predicate(const Predicate& p, const BindingSet& bindings, const MatchContext& ctx, std::string* reason = nullptr);

/// MissingBinding if a variable is absent.
ActionCommand instantiate_effect(const ProductionRule& rule, const BindingSet& bindings);

/// Rewrites type names in targets to concrete ids known in the snapshot.
ActionCommand resolve_action(const ActionCommand& action, const KnowledgeSnapshot& snapshot);

struct VerifyResult {
  bool pass = false;
  std::string reason;
  std::optional<ActionCommand> produced;
};

VerifyResult replay_verify(const ProductionRule& rule, const MatchContext& ctx, const ActionCommand& expected);

/// Decision list rendered as a tree: each rule contributes a chain of
/// condition nodes ending in its effect leaf; the "no" edge of every
/// condition leads to the next rule. Rules are ordered by utility, ties by id.
struct DecisionTree {
  struct Node {
    std::string label;
    bool leaf = false;
    int yes = -1;
    int no = -1;
    std::size_t rule = 0;       // index into `rules`
    std::size_t condition = 0;  // selectors first, then predicates
  };
  std::string family;
  std::vector<ProductionRule> rules;
  std::vector<Node> nodes;
  int root = -1;

  std::size_t leaf_count() const;
  std::string to_dot() const;
  /// Follows the tree on a snapshot; returns the id of the rule reached.
  std::optional<std::string> walk(const MatchContext& ctx) const;
};

/// EmptyRuleSet when `rules` is empty.
DecisionTree export_decision_tree(const std::vector<ProductionRule>& rules, const UtilityStore& utilities);

}  // namespace cogboot
