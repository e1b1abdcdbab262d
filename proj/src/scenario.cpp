#include "cogboot/scenario.hpp"

#include <algorithm>
#include <set>

#include "cogboot/error.hpp"
#include "cogboot/io.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

using nlohmann::json;

const ReceptacleSpec* FloorPlan::find_receptacle(std::string_view name) const {
  for (const auto& r : receptacles)
    if (text::iequals(r.name, name)) return &r;
  return nullptr;
}

const ObjectSpec* FloorPlan::find_object(std::string_view id) const {
  for (const auto& o : objects)
    if (text::iequals(o.id, id)) return &o;
  return nullptr;
}

namespace {

template <class Range, class Proj>
std::vector<std::string> sorted_distinct(const Range& range, Proj proj) {
  std::set<std::string> out;
  for (const auto& x : range)
    if (auto v = proj(x); !v.empty()) out.insert(v);
  return {out.begin(), out.end()};
}

GridPos parse_pos(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw Error(ErrorCode::SchemaError, what + ": expected [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

std::vector<std::string> FloorPlan::receptacle_names() const {
  return sorted_distinct(receptacles, [](const auto& r) { return r.name; });
}
std::vector<std::string> FloorPlan::receptacle_types() const {
  return sorted_distinct(receptacles, [](const auto& r) { return r.type; });
}
std::vector<std::string> FloorPlan::object_types() const {
  return sorted_distinct(objects, [](const auto& o) { return o.type; });
}
std::vector<std::string> FloorPlan::sliceable_types() const {
  return sorted_distinct(objects, [](const auto& o) { return o.sliceable ? o.type : std::string(); });
}

json FloorPlan::to_json() const {
  json j;
  j["grid"] = {width, height};
  j["robot"] = {robot.x, robot.y};
  j["receptacles"] = json::array();
  for (const auto& r : receptacles)
    j["receptacles"].push_back({{"name", r.name},
                                {"type", r.type},
                                {"pos", {r.pos.x, r.pos.y}},
                                {"openable", r.openable},
                                {"open", r.open}});
  j["objects"] = json::array();
  for (const auto& o : objects)
    j["objects"].push_back({{"id", o.id}, {"type", o.type}, {"sliceable", o.sliceable}, {"in", o.in}});
  return j;
}

FloorPlan parse_scenario(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "scenario must be a JSON object");
  for (const char* key : {"grid", "robot", "receptacles", "objects"})
    if (!j.contains(key)) throw Error(ErrorCode::SchemaError, std::string("missing key '") + key + "'");

  FloorPlan plan;
  auto grid = parse_pos(j["grid"], "grid");
  plan.width = grid.x;
  plan.height = grid.y;
  if (plan.width <= 0 || plan.height <= 0) throw Error(ErrorCode::SchemaError, "grid must be positive");
  auto in_grid = [&](GridPos p) { return p.x >= 0 && p.y >= 0 && p.x < plan.width && p.y < plan.height; };
  plan.robot = parse_pos(j["robot"], "robot");
  if (!in_grid(plan.robot)) throw Error(ErrorCode::SchemaError, "robot outside grid");

  std::set<std::string> names;
  auto claim = [&](const std::string& name) {
    if (name.empty()) throw Error(ErrorCode::SchemaError, "empty name");
    if (!names.insert(text::to_lower(name)).second)
      throw Error(ErrorCode::SchemaError, "duplicate name '" + name + "'");
  };

  try {
    if (!j["receptacles"].is_array()) throw Error(ErrorCode::SchemaError, "receptacles must be an array");
    for (const auto& rj : j["receptacles"]) {
      ReceptacleSpec r;
      r.name = rj.at("name").get<std::string>();
      r.type = rj.at("type").get<std::string>();
      r.pos = parse_pos(rj.at("pos"), "receptacle " + r.name);
      r.openable = rj.value("openable", false);
      r.open = rj.value("open", false);
      if (!r.openable && r.open) throw Error(ErrorCode::SchemaError, r.name + ": open but not openable");
      if (!in_grid(r.pos)) throw Error(ErrorCode::SchemaError, r.name + ": outside grid");
      claim(r.name);
      plan.receptacles.push_back(std::move(r));
    }
    if (!j["objects"].is_array()) throw Error(ErrorCode::SchemaError, "objects must be an array");
    for (const auto& oj : j["objects"]) {
      ObjectSpec o;
      o.id = oj.at("id").get<std::string>();
      o.type = oj.at("type").get<std::string>();
      o.sliceable = oj.value("sliceable", false);
      o.in = oj.at("in").get<std::string>();
      claim(o.id);
      plan.objects.push_back(std::move(o));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, e.what());
  }

  for (auto& o : plan.objects) {
    const auto* r = plan.find_receptacle(o.in);
    if (!r) throw Error(ErrorCode::DanglingReference, o.id + " is in unknown receptacle '" + o.in + "'");
    o.in = r->name;
  }
  return plan;
}

FloorPlan load_scenario(const std::filesystem::path& path) {
  auto content = io::read_text(path);
  if (text::trim(content).empty()) throw Error(ErrorCode::SchemaError, path.string() + ": empty file");
  json j;
  try {
    j = json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace cogboot
