#pragma once

#include <set>
#include <string>
#include <vector>

namespace cogboot {

inline constexpr const char* kGripper = "Gripper";
inline constexpr const char* kUnknownLocation = "Unknown";

struct GridPos {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

double distance(GridPos a, GridPos b);

struct ReceptacleView {
  std::string name;
  std::string type;
  GridPos pos;
  bool openable = false;
  bool open = false;
  friend bool operator==(const ReceptacleView&, const ReceptacleView&) = default;
};

struct ObjectView {
  std::string id;
  std::string type;
  std::string location;  // receptacle name or kGripper
  std::set<std::string> attributes;
  friend bool operator==(const ObjectView&, const ObjectView&) = default;
};

/// What the robot perceives after an action. Large receptacles are always
/// listed; objects only when visible (held, or inside the faced receptacle
/// while it is open or not openable).
struct Observation {
  std::string location;  // faced receptacle, empty when facing nothing
  GridPos robot;
  std::vector<ReceptacleView> receptacles;
  std::vector<ObjectView> visible_objects;
  friend bool operator==(const Observation&, const Observation&) = default;
};

}  // namespace cogboot
