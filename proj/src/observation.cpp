#include "cogboot/observation.hpp"

#include <cmath>

namespace cogboot {

double distance(GridPos a, GridPos b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

}  // namespace cogboot
