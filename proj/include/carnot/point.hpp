#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace carnot {

// Point of the group in exponential coordinates of the first kind,
// indexed (index within layer, layer) flattened layer-by-layer.
struct GroupPoint {
  std::vector<double> coords;

  GroupPoint() = default;
  explicit GroupPoint(int n) : coords(n, 0.0) {}
  explicit GroupPoint(std::vector<double> c) : coords(std::move(c)) {}

  int dim() const { return static_cast<int>(coords.size()); }
  double& operator[](int i) { return coords[i]; }
  double operator[](int i) const { return coords[i]; }

  bool finite() const {
    for (double v : coords)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct SpaceTimePoint {
  GroupPoint x;
  double t = 0.0;

  SpaceTimePoint() = default;
  SpaceTimePoint(GroupPoint p, double time) : x(std::move(p)), t(time) {}
};

struct Cylinder {
  SpaceTimePoint center;
  double radius = 1.0;

  Cylinder() = default;
  Cylinder(SpaceTimePoint c, double r) : center(std::move(c)), radius(r) {
    if (!(r > 0)) throw std::invalid_argument("cylinder radius must be positive");
  }
};

}  // namespace carnot
