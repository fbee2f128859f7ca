#include "avstress/geometry.hpp"

#include <cmath>

namespace avs {

OrientedRect OrientedRect::from_vehicle(const VehicleState& v) {
  OrientedRect r;
  r.center = {v.lon, v.lat};
  r.half_length = 0.5 * v.length;
  r.half_width = 0.5 * v.width;
  r.cos_h = std::cos(v.heading);
  r.sin_h = std::sin(v.heading);
  return r;
}

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 ax{cos_h * half_length, sin_h * half_length};
  const Vec2 ay{-sin_h * half_width, cos_h * half_width};
  return {{{center.x + ax.x + ay.x, center.y + ax.y + ay.y},
           {center.x + ax.x - ay.x, center.y + ax.y - ay.y},
           {center.x - ax.x - ay.x, center.y - ax.y - ay.y},
           {center.x - ax.x + ay.x, center.y - ax.y + ay.y}}};
}

namespace {

// Projected half-extent of rect r onto unit axis n, plus the projected
// center. Separated on this axis iff the center gap exceeds the extents.
bool separated_on_axis(const OrientedRect& a, const OrientedRect& b,
                       double nx, double ny) {
  const double dist =
      std::abs((b.center.x - a.center.x) * nx + (b.center.y - a.center.y) * ny);
  const double ra = a.half_length * std::abs(a.cos_h * nx + a.sin_h * ny) +
                    a.half_width * std::abs(-a.sin_h * nx + a.cos_h * ny);
  const double rb = b.half_length * std::abs(b.cos_h * nx + b.sin_h * ny) +
                    b.half_width * std::abs(-b.sin_h * nx + b.cos_h * ny);
  return dist > ra + rb;
}

}  // namespace

bool rects_overlap(const OrientedRect& a, const OrientedRect& b) {
  if (separated_on_axis(a, b, a.cos_h, a.sin_h)) return false;
  if (separated_on_axis(a, b, -a.sin_h, a.cos_h)) return false;
  if (separated_on_axis(a, b, b.cos_h, b.sin_h)) return false;
  if (separated_on_axis(a, b, -b.sin_h, b.cos_h)) return false;
  return true;
}

}  // namespace avs
