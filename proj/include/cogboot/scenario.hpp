#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/observation.hpp"

namespace cogboot {

struct ReceptacleSpec {
  std::string name;
  std::string type;
  GridPos pos;
  bool openable = false;
  bool open = false;
};

struct ObjectSpec {
  std::string id;
  std::string type;
  bool sliceable = false;
  std::string in;  // initial receptacle
};

struct FloorPlan {
  int width = 0;
  int height = 0;
  GridPos robot;
  std::vector<ReceptacleSpec> receptacles;
  std::vector<ObjectSpec> objects;

  const ReceptacleSpec* find_receptacle(std::string_view name) const;
  const ObjectSpec* find_object(std::string_view id) const;

  std::vector<std::string> receptacle_names() const;   // sorted
  std::vector<std::string> receptacle_types() const;   // sorted, distinct
  std::vector<std::string> object_types() const;       // sorted, distinct
  std::vector<std::string> sliceable_types() const;    // sorted, distinct

  nlohmann::json to_json() const;
};

/// Validates names, positions and references. SchemaError / DanglingReference.
FloorPlan parse_scenario(const nlohmann::json& j);
FloorPlan load_scenario(const std::filesystem::path& path);

}  // namespace cogboot
