#include "cogboot/memory.hpp"

#include <algorithm>
#include <cstdio>

#include "cogboot/error.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

using nlohmann::json;

std::string_view to_string(Truth t) {
  switch (t) {
    case Truth::True: return "True";
    case Truth::False: return "False";
    case Truth::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(Exploration e) {
  switch (e) {
    case Exploration::Unexplored: return "unexplored";
    case Exploration::Partial: return "partial";
    case Exploration::Fully: return "fully";
  }
  return "unexplored";
}

std::string_view to_string(OpenState s) {
  switch (s) {
    case OpenState::Open: return "open";
    case OpenState::Closed: return "closed";
    case OpenState::NotOpenable: return "not_openable";
  }
  return "not_openable";
}

Exploration exploration_from_string(std::string_view s) {
  if (s == "unexplored") return Exploration::Unexplored;
  if (s == "partial") return Exploration::Partial;
  if (s == "fully") return Exploration::Fully;
  throw Error(ErrorCode::SchemaError, "bad exploration state: " + std::string(s));
}

OpenState open_state_from_string(std::string_view s) {
  if (s == "open") return OpenState::Open;
  if (s == "closed") return OpenState::Closed;
  if (s == "not_openable") return OpenState::NotOpenable;
  throw Error(ErrorCode::SchemaError, "bad open state: " + std::string(s));
}

// ---- world knowledge ----

Truth WorldKnowledgeBase::get(std::string_view statement) const {
  auto it = entries_.find(text::canonicalize(statement));
  if (it == entries_.end()) return Truth::Unknown;
  return it->second ? Truth::True : Truth::False;
}

void WorldKnowledgeBase::set(std::string_view statement, bool value) {
  auto key = text::canonicalize(statement);
  if (key.empty()) throw Error(ErrorCode::EmptyStatement, "statement is empty");
  entries_[key] = value;
}

bool WorldKnowledgeBase::resolve(std::string_view statement, KnowledgeOracle& oracle) {
  auto key = text::canonicalize(statement);
  if (key.empty()) throw Error(ErrorCode::EmptyStatement, "statement is empty");
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  bool answer = oracle.ask_yes_no(key);
  entries_[key] = answer;
  return answer;
}

json WorldKnowledgeBase::to_json() const {
  json j = json::object();
  for (const auto& [k, v] : entries_) j[k] = v;
  return j;
}

WorldKnowledgeBase WorldKnowledgeBase::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "world_kb must be an object");
  WorldKnowledgeBase kb;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_boolean()) throw Error(ErrorCode::SchemaError, "world_kb value for '" + k + "' is not boolean");
    kb.set(k, v.get<bool>());
  }
  return kb;
}

// ---- snapshot ----

const ReceptacleKnowledge* KnowledgeSnapshot::find_receptacle(std::string_view name) const {
  for (const auto& r : spatial)
    if (text::iequals(r.name, name)) return &r;
  return nullptr;
}

const ObjectFact* KnowledgeSnapshot::find_object(std::string_view id) const {
  for (const auto& o : objects)
    if (text::iequals(o.object_id, id)) return &o;
  return nullptr;
}

const ObjectFact* KnowledgeSnapshot::gripper_object() const {
  for (const auto& o : objects)
    if (o.location == kGripper) return &o;
  return nullptr;
}

namespace {

json receptacle_json(const ReceptacleKnowledge& r) {
  return json{{"name", r.name},
              {"receptacle_type", r.receptacle_type},
              {"distance", r.distance},
              {"exploration", to_string(r.exploration)},
              {"open_state", to_string(r.open_state)},
              {"known_contents", r.known_contents}};
}

json object_json(const ObjectFact& o) {
  return json{{"object_id", o.object_id},
              {"object_type", o.object_type},
              {"location", o.location},
              {"attributes", o.attributes}};
}

ReceptacleKnowledge receptacle_from_json(const json& j) {
  try {
    ReceptacleKnowledge r;
    r.name = j.at("name").get<std::string>();
    r.receptacle_type = j.at("receptacle_type").get<std::string>();
    r.distance = j.value("distance", 0.0);
    r.exploration = exploration_from_string(j.value("exploration", std::string("unexplored")));
    r.open_state = open_state_from_string(j.value("open_state", std::string("not_openable")));
    r.known_contents = j.value("known_contents", std::vector<std::string>{});
    std::sort(r.known_contents.begin(), r.known_contents.end());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("receptacle record: ") + e.what());
  }
}

ObjectFact object_from_json(const json& j) {
  try {
    ObjectFact o;
    o.object_id = j.at("object_id").get<std::string>();
    o.object_type = j.at("object_type").get<std::string>();
    o.location = j.value("location", std::string(kUnknownLocation));
    o.attributes = j.value("attributes", std::set<std::string>{});
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("object record: ") + e.what());
  }
}

}  // namespace

json KnowledgeSnapshot::to_json() const {
  json j;
  j["current_task"] = current_task;
  j["location"] = location;
  j["spatial"] = json::array();
  for (const auto& r : spatial) j["spatial"].push_back(receptacle_json(r));
  j["objects"] = json::array();
  for (const auto& o : objects) j["objects"].push_back(object_json(o));
  j["previous_tasks"] = previous_tasks;
  return j;
}

KnowledgeSnapshot KnowledgeSnapshot::from_json(const json& j) {
  KnowledgeSnapshot s;
  s.current_task = j.value("current_task", std::string());
  s.location = j.value("location", std::string());
  if (j.contains("spatial"))
    for (const auto& r : j.at("spatial")) s.spatial.push_back(receptacle_from_json(r));
  if (j.contains("objects"))
    for (const auto& o : j.at("objects")) s.objects.push_back(object_from_json(o));
  if (j.contains("previous_tasks"))
    s.previous_tasks = j.at("previous_tasks").get<std::map<std::string, bool>>();
  return s;
}

// ---- fingerprint ----

std::string StateId::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

StateId StateId::from_hex(std::string_view hex) {
  StateId id;
  try {
    std::size_t used = 0;
    id.value = std::stoull(std::string(hex), &used, 16);
    if (used != hex.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::SchemaError, "bad state id: " + std::string(hex));
  }
  return id;
}

std::string canonical_serialization(const KnowledgeSnapshot& snapshot) {
  auto spatial = snapshot.spatial;
  std::sort(spatial.begin(), spatial.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  auto objects = snapshot.objects;
  std::sort(objects.begin(), objects.end(),
            [](const auto& a, const auto& b) { return a.object_id < b.object_id; });

  std::string out = "task=" + text::canonicalize(snapshot.current_task) + "\n";
  out += "at=" + snapshot.location + "\n";
  for (auto& r : spatial) {
    std::sort(r.known_contents.begin(), r.known_contents.end());
    out += "R|" + r.name + "|" + r.receptacle_type + "|" + text::format_fixed(r.distance, 3) + "|" +
           std::string(to_string(r.exploration)) + "|" + std::string(to_string(r.open_state)) + "|" +
           text::join(r.known_contents, ",") + "\n";
  }
  for (const auto& o : objects) {
    out += "O|" + o.object_id + "|" + o.object_type + "|" + o.location + "|" +
           text::join(std::vector<std::string>(o.attributes.begin(), o.attributes.end()), ",") + "\n";
  }
  return out;
}

StateId fingerprint(const KnowledgeSnapshot& snapshot) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical_serialization(snapshot)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return StateId{h};
}

std::optional<ReceptacleKnowledge> nearest_receptacle(const KnowledgeSnapshot& snapshot,
                                                      std::string_view receptacle_type) {
  const ReceptacleKnowledge* best = nullptr;
  for (const auto& r : snapshot.spatial) {
    if (!text::iequals(r.receptacle_type, receptacle_type)) continue;
    if (!best || r.distance < best->distance || (r.distance == best->distance && r.name < best->name))
      best = &r;
  }
  if (!best) return std::nullopt;
  return *best;
}

// ---- environment memory ----

void EnvironmentMemory::relocate(const std::string& object_id, const std::string& new_location) {
  auto it = objects_.find(object_id);
  if (it != objects_.end()) it->second.location = new_location;
}

void EnvironmentMemory::integrate_observation(const Observation& obs) {
  robot_ = obs.robot;
  location_ = obs.location;

  for (const auto& rv : obs.receptacles) {
    auto& rec = receptacles_[rv.name];
    rec.pos = rv.pos;
    rec.knowledge.name = rv.name;
    rec.knowledge.receptacle_type = rv.type;
    rec.knowledge.open_state = !rv.openable ? OpenState::NotOpenable
                               : rv.open    ? OpenState::Open
                                            : OpenState::Closed;
    rec.knowledge.distance = distance(robot_, rv.pos);
  }

  std::set<std::string> seen;
  for (const auto& ov : obs.visible_objects) {
    auto& fact = objects_[ov.id];
    fact.object_id = ov.id;
    fact.object_type = ov.type;
    fact.location = ov.location;
    fact.attributes = ov.attributes;
    seen.insert(ov.id);
  }

  // Whatever we believed was held or inside the faced, visible receptacle but
  // is no longer seen there has moved somewhere we cannot tell.
  bool faced_visible = false;
  if (auto it = receptacles_.find(location_); it != receptacles_.end()) {
    auto& k = it->second.knowledge;
    faced_visible = k.open_state != OpenState::Closed;
    if (faced_visible)
      k.exploration = Exploration::Fully;
    else if (k.exploration == Exploration::Unexplored)
      k.exploration = Exploration::Partial;
  }
  for (auto& [id, fact] : objects_) {
    if (seen.count(id)) continue;
    if (fact.location == kGripper || (faced_visible && fact.location == location_))
      fact.location = kUnknownLocation;
  }
}

std::optional<ReceptacleKnowledge> EnvironmentMemory::nearest_receptacle(
    std::string_view receptacle_type) const {
  return cogboot::nearest_receptacle(snapshot(""), receptacle_type);
}

void EnvironmentMemory::record_task_outcome(const std::string& task, bool success) {
  previous_tasks_[task] = success;
}

KnowledgeSnapshot EnvironmentMemory::snapshot(const std::string& current_task) const {
  KnowledgeSnapshot s;
  s.current_task = current_task;
  s.location = location_;
  s.previous_tasks = previous_tasks_;
  for (const auto& [name, rec] : receptacles_) {
    auto k = rec.knowledge;
    k.known_contents.clear();
    for (const auto& [id, fact] : objects_)
      if (fact.location == name) k.known_contents.push_back(id);
    s.spatial.push_back(std::move(k));
  }
  for (const auto& [id, fact] : objects_) s.objects.push_back(fact);
  return s;
}

json dump_knowledge(const WorldKnowledgeBase& kb, const KnowledgeSnapshot& snapshot) {
  json j;
  j["world_kb"] = kb.to_json();
  auto s = snapshot.to_json();
  j["spatial"] = s["spatial"];
  j["objects"] = s["objects"];
  return j;
}

}  // namespace cogboot
