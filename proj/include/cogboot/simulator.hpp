#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cogboot/action.hpp"
#include "cogboot/memory.hpp"
#include "cogboot/observation.hpp"
#include "cogboot/scenario.hpp"
#include "cogboot/tasking.hpp"

namespace cogboot {

inline constexpr const char* kKnifeType = "Knife";
inline constexpr const char* kSlicedAttr = "sliced";

enum class AffordanceCode {
  GripperFull,
  GripperEmpty,
  NotInView,
  NotOpenable,
  AlreadyOpen,
  AlreadyClosed,
  NoKnifeHeld,
  NotSliceable,
  ReceptacleClosed,
  NoSuchEntity,
};

std::string_view to_string(AffordanceCode code);

struct AffordanceError {
  AffordanceCode code;
  std::string message;
};

using StepResult = std::variant<Observation, AffordanceError>;

/// Deterministic kitchen gridworld. The robot faces at most one receptacle;
/// moving teleports it in front of the target.
class Simulator {
 public:
  explicit Simulator(FloorPlan plan);

  const FloorPlan& plan() const { return plan_; }

  /// Motor actions only; internal actions throw std::invalid_argument.
  StepResult step(const ActionCommand& action);
  Observation observe() const;

  /// Seeded permutation of object placements; receptacle occupancy counts are
  /// preserved. Resets the gripper and facing.
  void shuffle(std::uint64_t seed);

  std::string serialize_state() const;

  const std::string& facing() const { return facing_; }
  GridPos robot() const { return robot_; }
  std::optional<std::string> held() const;
  std::string object_location(const std::string& id) const;
  const std::set<std::string>& attributes(const std::string& id) const;
  bool is_open(const std::string& receptacle) const;
  bool is_visible(const std::string& object_id) const;
  bool interior_seen(const std::string& receptacle) const;
  std::vector<std::string> object_ids() const;

  /// Objects that sat on a CounterTop when the episode started (or was last shuffled).
  const std::vector<std::string>& initial_countertop_objects() const { return initial_countertop_; }

  /// Resolve an id or a type name to an entity id; empty if nothing matches.
  std::string resolve_receptacle(std::string_view ref) const;
  std::string resolve_object(std::string_view ref) const;

 private:
  struct ObjectState {
    std::string type;
    bool sliceable = false;
    std::string location;
    std::set<std::string> attributes;
  };

  bool contents_visible(const std::string& receptacle) const;
  void mark_seen();
  void reset_from_plan();

  FloorPlan plan_;
  GridPos robot_;
  std::string facing_;
  std::map<std::string, bool> open_;
  std::map<std::string, ObjectState> objects_;
  std::set<std::string> seen_;
  std::vector<std::string> initial_countertop_;
};

struct GoalResult {
  bool success = false;
  double score = 0.0;  // fraction for clear; 0 or 1 otherwise
};

/// Evaluation-only success check. `final_outcome` is how the agent ended the
/// task; a find for a type absent from the plan succeeds only by quitting.
GoalResult check_goal(const Simulator& sim, const TaskInstance& task, TaskOutcome final_outcome);

struct OptionList {
  std::vector<std::string> options;
  std::vector<std::string> blacklisted;
};

/// Afforded motor actions derived from knowledge, subtask entries for trained
/// families, and the special actions. The current task's own subtask entry is
/// always blacklisted.
OptionList list_options(const KnowledgeSnapshot& snapshot, const EndConditionRegistry& end_conditions,
                        const std::vector<std::string>& blacklist);

std::string subtask_option(const std::string& family, const std::string& end_condition);

}  // namespace cogboot
