#include "cogboot/learning.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

namespace cogboot {

using nlohmann::json;

UtilityRecord UtilityStore::get(const std::string& rule_id) const {
  auto it = records_.find(rule_id);
  return it == records_.end() ? UtilityRecord{} : it->second;
}

void UtilityStore::put(const std::string& rule_id, UtilityRecord record) { records_[rule_id] = record; }
void UtilityStore::ensure(const std::string& rule_id) { records_.try_emplace(rule_id); }
void UtilityStore::erase(const std::string& rule_id) { records_.erase(rule_id); }

json UtilityStore::to_json() const {
  json rules = json::object();
  for (const auto& [id, r] : records_) rules[id] = {{"utility", r.utility}, {"applications", r.applications}};
  return json{{"rules", rules}};
}

UtilityStore UtilityStore::from_json(const json& j) {
  UtilityStore s;
  try {
    for (const auto& [id, r] : j.at("rules").items())
      s.records_[id] = {r.at("utility").get<double>(), r.at("applications").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("utility store: ") + e.what());
  }
  return s;
}

std::vector<double> selection_probabilities(const std::vector<std::string>& rule_ids, const UtilityStore& store) {
  if (rule_ids.empty()) throw Error(ErrorCode::EmptyApplicableSet, "no applicable productions");
  std::vector<double> u;
  for (const auto& id : rule_ids) u.push_back(store.get(id).utility);
  double hi = *std::max_element(u.begin(), u.end());
  double total = 0;
  for (auto& x : u) total += (x = std::exp(x - hi));
  for (auto& x : u) x /= total;
  return u;
}

std::size_t select_index(const std::vector<std::string>& rule_ids, const UtilityStore& store, Rng& rng) {
  auto p = selection_probabilities(rule_ids, store);
  double draw = rng.uniform();
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (draw < acc) return i;
  }
  return p.size() - 1;
}

// ---- graph ----

void TransitionGraph::record(StateId from, const std::string& rule, StateId to) { edges_.push_back({from, rule, to}); }

std::vector<StateId> TransitionGraph::nodes() const {
  std::vector<StateId> out;
  std::set<StateId> seen;
  for (const auto& e : edges_)
    for (auto n : {e.from, e.to})
      if (seen.insert(n).second) out.push_back(n);
  return out;
}

bool TransitionGraph::reachable(StateId from, StateId to) const {
  if (from == to) return true;
  std::set<StateId> seen{from};
  std::deque<StateId> queue{from};
  while (!queue.empty()) {
    auto n = queue.front();
    queue.pop_front();
    for (const auto& e : edges_) {
      if (e.from != n || !seen.insert(e.to).second) continue;
      if (e.to == to) return true;
      queue.push_back(e.to);
    }
  }
  return false;
}

std::optional<std::vector<StateId>> detect_cycle(const TransitionGraph& graph) {
  enum class Color { White, Grey, Black };
  std::map<StateId, Color> color;
  std::vector<StateId> stack;
  std::optional<std::vector<StateId>> found;

  std::function<void(StateId)> dfs = [&](StateId n) {
    color[n] = Color::Grey;
    stack.push_back(n);
    for (const auto& e : graph.edges()) {
      if (found) return;
      if (e.from != n) continue;
      auto c = color[e.to];
      if (c == Color::Grey) {
        auto start = std::find(stack.begin(), stack.end(), e.to);
        found = std::vector<StateId>(start, stack.end());
        return;
      }
      if (c == Color::White) dfs(e.to);
    }
    stack.pop_back();
    color[n] = Color::Black;
  };

  for (auto n : graph.nodes()) {
    if (found) break;
    if (color[n] == Color::White) dfs(n);
  }
  return found;
}

std::vector<Edge> shortest_path(const TransitionGraph& graph, StateId start, StateId terminal) {
  if (start == terminal) return {};
  const auto& edges = graph.edges();
  std::map<StateId, std::size_t> via;  // node -> index of the edge that first reached it
  std::set<StateId> seen{start};
  std::deque<StateId> queue{start};
  while (!queue.empty()) {
    auto n = queue.front();
    queue.pop_front();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (e.from != n || !seen.insert(e.to).second) continue;
      via[e.to] = i;
      if (e.to == terminal) {
        std::vector<Edge> path;
        for (auto cur = terminal; cur != start; cur = edges[via[cur]].from) path.push_back(edges[via[cur]]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(e.to);
    }
  }
  throw Error(ErrorCode::Unreachable, "state " + terminal.hex() + " is not reachable from " + start.hex());
}

void reinforce(UtilityStore& store, const std::vector<Edge>& path, const LearningConfig& config) {
  for (std::size_t k = path.size(); k-- > 0;) {
    const auto& rule = path[k].rule;
    if (rule.empty()) continue;
    auto dt = static_cast<double>(path.size() - 1 - k);
    auto r = store.get(rule);
    double n = static_cast<double>(r.applications);
    r.utility = (n * r.utility + config.reward * std::pow(config.discount, dt)) / (n + 1.0);
    r.applications += 1;
    store.put(rule, r);
  }
}

// ---- pathways ----

static void collect(const TaskTrace& trace, std::vector<TaskTrace>& out) {
  TaskTrace flat{trace.task, {}, trace.end};
  for (const auto& s : trace.steps) flat.steps.push_back({s.edge, nullptr});
  if (trace.end == TraceEnd::Done) out.push_back(std::move(flat));
  for (const auto& s : trace.steps)
    if (s.subtask) collect(*s.subtask, out);
}

std::vector<TaskTrace> split_pathways(const TaskTrace& trace) {
  std::vector<TaskTrace> out;
  collect(trace, out);
  return out;
}

std::vector<Edge> reinforce_trace(UtilityStore& store, const TaskTrace& flat, const LearningConfig& config) {
  if (flat.steps.empty()) return {};
  TransitionGraph g;
  for (const auto& s : flat.steps) g.record(s.edge.from, s.edge.rule, s.edge.to);
  auto path = shortest_path(g, flat.steps.front().edge.from, kTerminalState);
  reinforce(store, path, config);
  return path;
}

json edge_to_json(std::size_t t, const Edge& e) {
  return json{{"t", t}, {"from", e.from.hex()}, {"rule", e.rule}, {"to", e.to.hex()}};
}

}  // namespace cogboot
