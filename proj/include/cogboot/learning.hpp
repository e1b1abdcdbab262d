#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/error.hpp"
#include "cogboot/memory.hpp"

namespace cogboot {

/// Graph node standing for "the task was declared done".
inline constexpr StateId kTerminalState{~std::uint64_t{0}};

struct UtilityRecord {
  double utility = 0.0;
  std::uint64_t applications = 0;
  friend bool operator==(const UtilityRecord&, const UtilityRecord&) = default;
};

struct LearningConfig {
  double discount = 0.95;
  double reward = 1.0;
};

class UtilityStore {
 public:
  /// Fresh record (0, 0) for unseen ids.
  UtilityRecord get(const std::string& rule_id) const;
  void put(const std::string& rule_id, UtilityRecord record);
  void ensure(const std::string& rule_id);
  void erase(const std::string& rule_id);
  const std::map<std::string, UtilityRecord>& records() const { return records_; }

  nlohmann::json to_json() const;
  static UtilityStore from_json(const nlohmann::json& j);

  friend bool operator==(const UtilityStore&, const UtilityStore&) = default;

 private:
  std::map<std::string, UtilityRecord> records_;
};

/// Seeded generator shared by every stochastic choice in a run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Softmax probabilities exp(U_i) / sum_j exp(U_j).
std::vector<double> selection_probabilities(const std::vector<std::string>& rule_ids, const UtilityStore& store);

/// Index drawn with the probabilities above. EmptyApplicableSet when empty.
std::size_t select_index(const std::vector<std::string>& rule_ids, const UtilityStore& store, Rng& rng);

template <class Candidate, class IdOf>
const Candidate& select(const std::vector<Candidate>& applicable, IdOf id_of, const UtilityStore& store, Rng& rng) {
  std::vector<std::string> ids;
  ids.reserve(applicable.size());
  for (const auto& c : applicable) ids.push_back(id_of(c));
  return applicable[select_index(ids, store, rng)];
}

struct Edge {
  StateId from;
  std::string rule;  // empty when the step came from the oracle without a stored rule
  StateId to;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class TransitionGraph {
 public:
  void record(StateId from, const std::string& rule, StateId to);
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<StateId> nodes() const;  // order of first appearance
  bool reachable(StateId from, StateId to) const;
  void clear() { edges_.clear(); }

 private:
  std::vector<Edge> edges_;
};

/// Depth-first search; returns the nodes of one cycle in traversal order.
std::optional<std::vector<StateId>> detect_cycle(const TransitionGraph& graph);

/// Fewest-edge path; ties go to the earliest recorded edge. Unreachable otherwise.
std::vector<Edge> shortest_path(const TransitionGraph& graph, StateId start, StateId terminal);

/// U <- (N*U + reward*gamma^dt) / (N + 1); N <- N + 1, where dt counts the
/// edges left after this one. Applied from the last edge backwards.
void reinforce(UtilityStore& store, const std::vector<Edge>& path, const LearningConfig& config);

enum class TraceEnd { Open, Done, Quit };

struct TaskTrace;

struct TraceStep {
  Edge edge;
  std::shared_ptr<TaskTrace> subtask;  // set when the rule attended to a subtask
};

struct TaskTrace {
  std::string task;
  std::vector<TraceStep> steps;
  TraceEnd end = TraceEnd::Open;
};

/// One flat trace per activation that ended Done, parent before children.
std::vector<TaskTrace> split_pathways(const TaskTrace& trace);

/// Builds the activation graph, takes the shortest path from the first state to
/// the terminal and reinforces it. Returns the path used.
std::vector<Edge> reinforce_trace(UtilityStore& store, const TaskTrace& flat, const LearningConfig& config);

nlohmann::json edge_to_json(std::size_t t, const Edge& e);

}  // namespace cogboot
