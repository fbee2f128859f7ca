#include <array>
#include <cmath>

#include "avstress/geometry.hpp"
#include "avstress/rng.hpp"
#include "doctest.h"

using namespace avs;

namespace {

OrientedRect make_rect(double cx, double cy, double len, double wid,
                       double heading) {
  OrientedRect r;
  r.center = {cx, cy};
  r.half_length = 0.5 * len;
  r.half_width = 0.5 * wid;
  r.cos_h = std::cos(heading);
  r.sin_h = std::sin(heading);
  return r;
}

// Reference separating-axis test written independently of the library:
// projects both corner sets onto each rectangle's two edge normals and
// reports overlap when no axis separates them.
bool sat_reference(const OrientedRect& a, const OrientedRect& b) {
  const std::array<Vec2, 4> ca = a.corners();
  const std::array<Vec2, 4> cb = b.corners();
  const std::array<Vec2, 4> axes = {
      Vec2{a.cos_h, a.sin_h}, Vec2{-a.sin_h, a.cos_h},
      Vec2{b.cos_h, b.sin_h}, Vec2{-b.sin_h, b.cos_h}};
  for (const Vec2& axis : axes) {
    double lo_a = 1e300, hi_a = -1e300, lo_b = 1e300, hi_b = -1e300;
    for (const Vec2& p : ca) {
      const double t = p.x * axis.x + p.y * axis.y;
      lo_a = std::min(lo_a, t);
      hi_a = std::max(hi_a, t);
    }
    for (const Vec2& p : cb) {
      const double t = p.x * axis.x + p.y * axis.y;
      lo_b = std::min(lo_b, t);
      hi_b = std::max(hi_b, t);
    }
    if (hi_a < lo_b || hi_b < lo_a) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rect corners span length and width") {
  const OrientedRect r = make_rect(10.0, 2.0, 5.0, 2.0, 0.0);
  const auto c = r.corners();
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const Vec2& p : c) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  CHECK(min_x == doctest::Approx(7.5));
  CHECK(max_x == doctest::Approx(12.5));
  CHECK(min_y == doctest::Approx(1.0));
  CHECK(max_y == doctest::Approx(3.0));
}

TEST_CASE("identical rectangles overlap") {
  const OrientedRect r = make_rect(0.0, 0.0, 5.0, 2.0, 0.0);
  CHECK(rects_overlap(r, r));
}

TEST_CASE("adjacent-lane vehicles do not overlap") {
  // Lat gap 4 m between centers, widths 2 m each: 3 m of clearance.
  const OrientedRect a = make_rect(0.0, 0.0, 5.0, 2.0, 0.0);
  const OrientedRect b = make_rect(0.0, 4.0, 5.0, 2.0, 0.0);
  CHECK_FALSE(rects_overlap(a, b));
  CHECK_FALSE(rects_overlap(b, a));
}

TEST_CASE("touching rectangles count as overlapping") {
  const OrientedRect a = make_rect(0.0, 0.0, 5.0, 2.0, 0.0);
  const OrientedRect b = make_rect(5.0, 0.0, 5.0, 2.0, 0.0);
  CHECK(rects_overlap(a, b));
}

TEST_CASE("rotation brings clear rectangles into contact") {
  // Side by side with 0.5 m of lateral clearance; yawing one by 30
  // degrees sweeps its corner across the gap.
  const OrientedRect a = make_rect(0.0, 0.0, 5.0, 2.0, 0.0);
  const OrientedRect straight = make_rect(0.0, 2.5, 5.0, 2.0, 0.0);
  const OrientedRect yawed = make_rect(0.0, 2.5, 5.0, 2.0, 0.5);
  CHECK_FALSE(rects_overlap(a, straight));
  CHECK(rects_overlap(a, yawed));
}

TEST_CASE("from_vehicle carries pose and size") {
  VehicleState v;
  v.lon = 100.0;
  v.lat = -4.0;
  v.heading = 0.2;
  v.length = 5.0;
  v.width = 2.0;
  const OrientedRect r = OrientedRect::from_vehicle(v);
  CHECK(r.center.x == doctest::Approx(100.0));
  CHECK(r.center.y == doctest::Approx(-4.0));
  CHECK(r.half_length == doctest::Approx(2.5));
  CHECK(r.half_width == doctest::Approx(1.0));
  CHECK(r.cos_h == doctest::Approx(std::cos(0.2)));
  CHECK(r.sin_h == doctest::Approx(std::sin(0.2)));
}

TEST_CASE("overlap test agrees with an independent SAT oracle") {
  Rng rng(2024);
  int overlaps = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const OrientedRect a =
        make_rect(rng.uniform(-6.0, 6.0), rng.uniform(-4.0, 4.0),
                  rng.uniform(1.0, 6.0), rng.uniform(1.0, 3.0),
                  rng.uniform(-0.8, 0.8));
    const OrientedRect b =
        make_rect(rng.uniform(-6.0, 6.0), rng.uniform(-4.0, 4.0),
                  rng.uniform(1.0, 6.0), rng.uniform(1.0, 3.0),
                  rng.uniform(-0.8, 0.8));
    const bool expect = sat_reference(a, b);
    CHECK(rects_overlap(a, b) == expect);
    CHECK(rects_overlap(b, a) == expect);
    overlaps += expect ? 1 : 0;
  }
  // The draw ranges are tuned so both outcomes are well represented.
  CHECK(overlaps > 100);
  CHECK(overlaps < 900);
}
