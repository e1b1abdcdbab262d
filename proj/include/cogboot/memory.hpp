#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/observation.hpp"

namespace cogboot {

enum class Truth { True, False, Unknown };

std::string_view to_string(Truth t);

/// Anything that can answer a yes/no question about general world knowledge.
/// The oracle client implements this; tests use counting mocks.
class KnowledgeOracle {
 public:
  virtual ~KnowledgeOracle() = default;
  virtual bool ask_yes_no(const std::string& canonical_statement) = 0;
};

/// General world knowledge: canonical statement -> boolean. A missing key
/// means Unknown, never False.
class WorldKnowledgeBase {
 public:
  Truth get(std::string_view statement) const;
  void set(std::string_view statement, bool value);

  /// Memoized lookup; asks `oracle` exactly once per unseen statement.
  bool resolve(std::string_view statement, KnowledgeOracle& oracle);

  const std::map<std::string, bool>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  nlohmann::json to_json() const;
  static WorldKnowledgeBase from_json(const nlohmann::json& j);

  friend bool operator==(const WorldKnowledgeBase&, const WorldKnowledgeBase&) = default;

 private:
  std::map<std::string, bool> entries_;
};

enum class Exploration { Unexplored, Partial, Fully };
enum class OpenState { Open, Closed, NotOpenable };

std::string_view to_string(Exploration e);
std::string_view to_string(OpenState s);
Exploration exploration_from_string(std::string_view s);
OpenState open_state_from_string(std::string_view s);

struct ReceptacleKnowledge {
  std::string name;
  std::string receptacle_type;
  double distance = 0.0;
  Exploration exploration = Exploration::Unexplored;
  OpenState open_state = OpenState::NotOpenable;
  std::vector<std::string> known_contents;  // sorted object ids
  friend bool operator==(const ReceptacleKnowledge&, const ReceptacleKnowledge&) = default;
};

struct ObjectFact {
  std::string object_id;
  std::string object_type;
  std::string location = kUnknownLocation;  // receptacle name, kGripper or kUnknownLocation
  std::set<std::string> attributes;
  friend bool operator==(const ObjectFact&, const ObjectFact&) = default;
};

/// Everything the productions may condition on at one decision point.
struct KnowledgeSnapshot {
  std::string current_task;
  std::string location;  // faced receptacle, empty if none
  std::vector<ReceptacleKnowledge> spatial;
  std::vector<ObjectFact> objects;
  std::map<std::string, bool> previous_tasks;

  const ReceptacleKnowledge* find_receptacle(std::string_view name) const;
  const ObjectFact* find_object(std::string_view id) const;
  const ObjectFact* gripper_object() const;

  nlohmann::json to_json() const;
  static KnowledgeSnapshot from_json(const nlohmann::json& j);
};

/// 64-bit identity of a knowledge state, used as a transition-graph node.
struct StateId {
  std::uint64_t value = 0;
  std::string hex() const;
  static StateId from_hex(std::string_view hex);
  auto operator<=>(const StateId&) const = default;
};

/// Canonical serialization hashed by `fingerprint`: task, receptacles sorted by
/// name, objects sorted by id. Previous tasks are left out.
std::string canonical_serialization(const KnowledgeSnapshot& snapshot);
StateId fingerprint(const KnowledgeSnapshot& snapshot);

/// Nearest receptacle of a type (case-insensitive); ties by name.
std::optional<ReceptacleKnowledge> nearest_receptacle(const KnowledgeSnapshot& snapshot,
                                                      std::string_view receptacle_type);

/// Accumulated environment knowledge built from observations.
class EnvironmentMemory {
 public:
  void integrate_observation(const Observation& obs);

  std::optional<ReceptacleKnowledge> nearest_receptacle(std::string_view receptacle_type) const;

  void record_task_outcome(const std::string& task, bool success);
  const std::map<std::string, bool>& previous_tasks() const { return previous_tasks_; }

  KnowledgeSnapshot snapshot(const std::string& current_task) const;

  const std::string& location() const { return location_; }

 private:
  struct Receptacle {
    ReceptacleKnowledge knowledge;
    GridPos pos;
  };

  void relocate(const std::string& object_id, const std::string& new_location);

  std::map<std::string, Receptacle> receptacles_;
  std::map<std::string, ObjectFact> objects_;
  std::map<std::string, bool> previous_tasks_;
  std::string location_;
  GridPos robot_;
};

/// {"world_kb": {...}, "spatial": [...], "objects": [...]}
nlohmann::json dump_knowledge(const WorldKnowledgeBase& kb, const KnowledgeSnapshot& snapshot);

}  // namespace cogboot
