#pragma once

#include <array>

#include "avstress/types.hpp"

namespace avs {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Oriented rectangle in road coordinates (x = longitudinal, y = lateral).
struct OrientedRect {
  Vec2 center;
  double half_length = 0.0;
  double half_width = 0.0;
  double cos_h = 1.0;
  double sin_h = 0.0;

  static OrientedRect from_vehicle(const VehicleState& v);
  std::array<Vec2, 4> corners() const;
};

/// Separating-axis overlap test for two oriented rectangles. Touching
/// rectangles count as overlapping.
bool rects_overlap(const OrientedRect& a, const OrientedRect& b);

}  // namespace avs
