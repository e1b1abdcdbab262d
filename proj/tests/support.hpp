#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cogboot/memory.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/production.hpp"
#include "cogboot/scenario.hpp"

namespace testsupport {

inline const std::filesystem::path kData = COGBOOT_DATA_DIR;
inline const std::filesystem::path kTestData = COGBOOT_TEST_DATA_DIR;

/// Answers from a fixed table and counts questions.
class CountingOracle : public cogboot::KnowledgeOracle {
 public:
  explicit CountingOracle(bool answer = true) : answer_(answer) {}
  bool ask_yes_no(const std::string& statement) override {
    asked.push_back(statement);
    return answer_;
  }
  std::vector<std::string> asked;

 private:
  bool answer_;
};

/// Backend answering through a callback; keeps every prompt it saw.
class FnBackend : public cogboot::OracleBackend {
 public:
  using Fn = std::function<std::string(const cogboot::PromptBundle&)>;
  explicit FnBackend(Fn fn, std::vector<cogboot::PromptBundle>* seen = nullptr) : fn_(std::move(fn)), seen_(seen) {}
  std::string complete(const cogboot::PromptBundle& p) override {
    if (seen_) seen_->push_back(p);
    return fn_(p);
  }

 private:
  Fn fn_;
  std::vector<cogboot::PromptBundle>* seen_;
};

/// A well-formed action-selection answer naming `option`.
inline std::string suggest(const std::string& option) {
  return "[Option Suggestion]\n\"" + option + "\"\n\n[Purpose]\ntest\n";
}

/// Two countertops, a closed fridge and a cabinet around a robot at (5,5).
inline cogboot::FloorPlan small_plan() {
  return cogboot::parse_scenario(nlohmann::json::parse(R"({
    "grid": [10, 10],
    "robot": [5, 5],
    "receptacles": [
      {"name": "Fridge_1", "type": "Fridge", "pos": [0, 0], "openable": true, "open": false},
      {"name": "Cabinet_1", "type": "Cabinet", "pos": [9, 0], "openable": true, "open": false},
      {"name": "CounterTop_1", "type": "CounterTop", "pos": [0, 9], "openable": false, "open": false},
      {"name": "CounterTop_2", "type": "CounterTop", "pos": [9, 9], "openable": false, "open": false}
    ],
    "objects": [
      {"id": "Apple_1", "type": "Apple", "sliceable": true, "in": "Fridge_1"},
      {"id": "Egg_1", "type": "Egg", "sliceable": false, "in": "Fridge_1"},
      {"id": "Knife_1", "type": "Knife", "sliceable": false, "in": "CounterTop_2"},
      {"id": "Bread_1", "type": "Bread", "sliceable": true, "in": "CounterTop_1"}
    ]
  })"));
}

/// Builds a snapshot from the compact case rows used in tests/data:
/// receptacles [name, type, distance, exploration, open_state],
/// objects [id, type, location, [attrs...]].
inline cogboot::KnowledgeSnapshot compact_snapshot(const nlohmann::json& c) {
  cogboot::KnowledgeSnapshot s;
  s.current_task = c.at("task").get<std::string>();
  s.location = c.value("location", "");
  for (const auto& r : c.at("receptacles")) {
    cogboot::ReceptacleKnowledge k;
    k.name = r.at(0).get<std::string>();
    k.receptacle_type = r.at(1).get<std::string>();
    k.distance = r.at(2).get<double>();
    k.exploration = cogboot::exploration_from_string(r.at(3).get<std::string>());
    k.open_state = cogboot::open_state_from_string(r.at(4).get<std::string>());
    s.spatial.push_back(k);
  }
  for (const auto& o : c.at("objects")) {
    cogboot::ObjectFact f;
    f.object_id = o.at(0).get<std::string>();
    f.object_type = o.at(1).get<std::string>();
    f.location = o.at(2).get<std::string>();
    for (const auto& a : o.at(3)) f.attributes.insert(a.get<std::string>());
    s.objects.push_back(f);
  }
  for (auto& r : s.spatial) {
    for (const auto& f : s.objects)
      if (f.location == r.name) r.known_contents.push_back(f.object_id);
    std::sort(r.known_contents.begin(), r.known_contents.end());
  }
  return s;
}

inline cogboot::WorldKnowledgeBase compact_kb(const nlohmann::json& c) {
  cogboot::WorldKnowledgeBase kb;
  if (c.contains("world_kb"))
    for (const auto& [k, v] : c.at("world_kb").items()) kb.set(k, v.get<bool>());
  return kb;
}

}  // namespace testsupport
