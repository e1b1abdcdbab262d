#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/scenario.hpp"

namespace cogboot {

using BindingSet = std::map<std::string, std::string>;

/// A task family such as "find a/an <object>".
class TaskPattern {
 public:
  TaskPattern() = default;
  explicit TaskPattern(std::string text);

  const std::string& text() const { return text_; }
  /// Variable names in order of first appearance.
  std::vector<std::string> variables() const;

  friend bool operator==(const TaskPattern& a, const TaskPattern& b) { return a.text_ == b.text_; }
  friend bool operator<(const TaskPattern& a, const TaskPattern& b) { return a.text_ < b.text_; }

 private:
  struct Segment {
    bool variable;
    std::string value;
  };
  friend std::optional<BindingSet> match_task(const TaskPattern&, std::string_view);
  friend std::string substitute(const TaskPattern&, const BindingSet&);

  std::string text_;
  std::vector<Segment> segments_;
};

/// Literal segments compare case-insensitively (whitespace runs collapse);
/// variables capture maximal non-empty spans.
std::optional<BindingSet> match_task(const TaskPattern& pattern, std::string_view task);

/// Throws MissingBinding when a variable has no value.
std::string substitute(const TaskPattern& pattern, const BindingSet& bindings);

/// Generic template substitution over `<var>` placeholders.
std::string substitute(std::string_view template_text, const BindingSet& bindings);

enum class TaskOutcome { Pending, Done, Quit };

struct TaskInstance {
  std::string text;
  TaskPattern family;
  BindingSet bindings;
  TaskOutcome outcome = TaskOutcome::Pending;
};

TaskInstance make_task(const TaskPattern& family, const BindingSet& bindings);

/// `<object>` draws an object type, `<sliceable>` a sliceable type and any
/// other variable a receptacle: a type when written as "a/an <v>", otherwise a
/// receptacle name. NoCandidates when a domain is empty.
TaskInstance instantiate_random(const TaskPattern& pattern, const FloorPlan& plan,
                                std::mt19937_64& rng);

enum class PushResult { Pushed, Duplicate, DepthExceeded };

class TaskStack {
 public:
  static constexpr std::size_t kMaxDepth = 8;

  PushResult push(TaskInstance task);
  TaskInstance pop(TaskOutcome outcome);

  bool empty() const { return stack_.empty(); }
  std::size_t depth() const { return stack_.size(); }
  const TaskInstance& top() const;
  const std::vector<TaskInstance>& frames() const { return stack_; }
  bool contains(const std::string& family, const BindingSet& bindings) const;

  const std::map<std::string, bool>& history() const { return history_; }

 private:
  std::vector<TaskInstance> stack_;
  std::map<std::string, bool> history_;
};

class EndConditionRegistry {
 public:
  void set(const std::string& family, const std::string& sentence);
  std::optional<std::string> get(const std::string& family) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  nlohmann::json to_json() const;
  static EndConditionRegistry from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::string> entries_;
};

using Curriculum = std::vector<TaskPattern>;

Curriculum parse_curriculum(std::string_view text);
Curriculum load_curriculum(const std::filesystem::path& path);

/// First family in `families` whose pattern matches the task.
std::optional<TaskPattern> family_of(std::string_view task, const std::vector<TaskPattern>& families);

/// Short family key used in manifests and metrics: explore, find, pick_place, slice, clear.
std::string family_key(const TaskPattern& pattern);

}  // namespace cogboot
