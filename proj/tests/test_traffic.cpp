#include <cmath>
#include <limits>
#include <optional>

#include "avstress/action_space.hpp"
#include "avstress/rng.hpp"
#include "avstress/traffic.hpp"
#include "doctest.h"

using namespace avs;

namespace {

VehicleState vehicle(int id, int lane, double lon, double speed,
                     const RoadGeometry& road) {
  VehicleState v;
  v.id = id;
  v.lane = lane;
  v.lon = lon;
  v.lat = road.lane_center(lane);
  v.speed = speed;
  return v;
}

Scene two_vehicle_scene(double gap_centers, double v_follow, double v_lead) {
  RoadGeometry road;
  Scene s;
  s.cav_id = 0;
  s.vehicles.push_back(vehicle(0, 1, 100.0, v_follow, road));
  s.vehicles.push_back(vehicle(1, 1, 100.0 + gap_centers, v_lead, road));
  return s;
}

}  // namespace

TEST_CASE("advance: zero acceleration is uniform motion") {
  RoadGeometry road;
  VehicleState v = vehicle(0, 1, 50.0, 30.0, road);
  const VehicleState next = advance_vehicle(v, {Maneuver::kKeep, 0.0}, 1.0, road);
  CHECK(next.speed == doctest::Approx(30.0));
  CHECK(next.lon == doctest::Approx(80.0));
  CHECK(next.heading == 0.0);
  CHECK(next.lane == 1);
}

TEST_CASE("advance: braking to a stop uses piecewise kinematics") {
  // v=1, a=-4: stops at t=0.25 s after 1*0.25 - 2*0.25^2 = 0.125 m.
  RoadGeometry road;
  VehicleState v = vehicle(0, 0, 10.0, 1.0, road);
  const VehicleState next =
      advance_vehicle(v, {Maneuver::kKeep, -4.0}, 1.0, road);
  CHECK(next.speed == 0.0);
  CHECK(next.lon == doctest::Approx(10.125));
}

TEST_CASE("advance: speed never goes negative") {
  RoadGeometry road;
  VehicleState v = vehicle(0, 0, 10.0, 0.0, road);
  const VehicleState next =
      advance_vehicle(v, {Maneuver::kKeep, -4.0}, 1.0, road);
  CHECK(next.speed == 0.0);
  CHECK(next.lon == doctest::Approx(10.0));
}

TEST_CASE("advance: lane change crosses in one decision step") {
  RoadGeometry road;  // lane_width 4
  VehicleState v = vehicle(0, 1, 50.0, 30.0, road);
  const double start_lat = v.lat;

  // Half way through the maneuver the vehicle is between lane centers
  // with the documented heading; at the end it is settled in the target
  // lane with zero heading.
  const VehicleState mid =
      advance_vehicle(v, {Maneuver::kLeft, 0.0}, 0.5, road, 1.0);
  CHECK(mid.lat == doctest::Approx(start_lat + 2.0));
  CHECK(mid.heading == doctest::Approx(std::atan2(4.0, 30.0)));
  CHECK(mid.speed == doctest::Approx(30.0));

  const VehicleState done =
      advance_vehicle(v, {Maneuver::kLeft, 0.0}, 1.0, road, 1.0);
  CHECK(done.lat == doctest::Approx(start_lat + 4.0));
  CHECK(done.lane == 2);
  CHECK(done.heading == 0.0);
  CHECK(done.lon == doctest::Approx(50.0 + 30.0));
}

TEST_CASE("advance: off-road lane change degrades to keep") {
  RoadGeometry road;
  VehicleState v = vehicle(0, road.lane_count - 1, 50.0, 30.0, road);
  const VehicleState next =
      advance_vehicle(v, {Maneuver::kLeft, 0.0}, 1.0, road);
  CHECK(next.lane == road.lane_count - 1);
  CHECK(next.lat == doctest::Approx(v.lat));
  CHECK(next.speed == doctest::Approx(30.0));
}

TEST_CASE("advance rejects non-finite input") {
  RoadGeometry road;
  VehicleState v = vehicle(0, 0, 0.0, 10.0, road);
  CHECK_THROWS_AS(
      advance_vehicle(v, {Maneuver::kKeep, std::numeric_limits<double>::quiet_NaN()},
                      1.0, road),
      std::invalid_argument);
  CHECK_THROWS_AS(advance_vehicle(v, {Maneuver::kKeep, 0.0}, 0.0, road),
                  std::invalid_argument);
}

TEST_CASE("bbd arithmetic") {
  Scene s = two_vehicle_scene(25.0, 30.0, 20.0);
  CHECK(bbd(s.vehicles[0], s.vehicles[1]) == doctest::Approx(20.0));
  s = two_vehicle_scene(5.0, 30.0, 20.0);
  CHECK(bbd(s.vehicles[0], s.vehicles[1]) == doctest::Approx(0.0));
  s = two_vehicle_scene(4.0, 30.0, 20.0);
  CHECK(bbd(s.vehicles[0], s.vehicles[1]) == doctest::Approx(-1.0));
}

TEST_CASE("ttc definition") {
  // bbd 50 m, closing 10 m/s: 5 s.
  Scene s = two_vehicle_scene(55.0, 30.0, 20.0);
  const auto t = ttc(s.vehicles[0], s.vehicles[1]);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(5.0));

  // Opening gap and equal speeds: no collision course.
  s = two_vehicle_scene(55.0, 20.0, 30.0);
  CHECK_FALSE(ttc(s.vehicles[0], s.vehicles[1]).has_value());
  s = two_vehicle_scene(55.0, 25.0, 25.0);
  CHECK_FALSE(ttc(s.vehicles[0], s.vehicles[1]).has_value());
}

TEST_CASE("ttc and bbd agree with inline recomputation on random pairs") {
  RoadGeometry road;
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    VehicleState f = vehicle(0, 1, rng.uniform(0.0, 100.0),
                             rng.uniform(0.0, 40.0), road);
    VehicleState l = vehicle(1, 1, f.lon + rng.uniform(5.1, 200.0),
                             rng.uniform(0.0, 40.0), road);
    const double expect_bbd = (l.lon - f.lon) - 0.5 * (f.length + l.length);
    CHECK(bbd(f, l) == doctest::Approx(expect_bbd));
    const double closing = f.speed - l.speed;
    const auto t = ttc(f, l);
    if (closing > 0.0) {
      REQUIRE(t.has_value());
      CHECK(*t == doctest::Approx(expect_bbd / closing));
    } else {
      CHECK_FALSE(t.has_value());
    }
  }
}

TEST_CASE("detect_crash: full overlap and lateral separation") {
  Scene s = two_vehicle_scene(0.0, 10.0, 10.0);
  auto events = detect_crash(s);
  REQUIRE(events.size() == 1);
  CHECK(events[0].vehicle_a == 0);
  CHECK(events[0].vehicle_b == 1);

  RoadGeometry road;
  Scene apart;
  apart.cav_id = 0;
  apart.vehicles.push_back(vehicle(0, 0, 100.0, 10.0, road));
  apart.vehicles.push_back(vehicle(1, 1, 100.0, 10.0, road));
  CHECK(detect_crash(apart).empty());
}

TEST_CASE("detect_crash event geometry fields") {
  Scene s = two_vehicle_scene(4.0, 10.0, 10.0);
  s.time = 7.5;
  auto events = detect_crash(s);
  REQUIRE(events.size() == 1);
  CHECK(events[0].time == doctest::Approx(7.5));
  CHECK(events[0].contact_lon == doctest::Approx(4.0));
  CHECK(events[0].contact_lat == doctest::Approx(0.0));
  CHECK(events[0].relative_heading == doctest::Approx(0.0));
}

TEST_CASE("detect_crash reports each overlapping pair once, ordered") {
  RoadGeometry road;
  Scene s;
  s.cav_id = 0;
  // Three vehicles stacked on the same spot: 3 pairwise events.
  for (int i = 0; i < 3; ++i) s.vehicles.push_back(vehicle(i, 1, 50.0, 10.0, road));
  auto events = detect_crash(s);
  REQUIRE(events.size() == 3);
  CHECK(events[0].vehicle_a == 0);
  CHECK(events[0].vehicle_b == 1);
  CHECK(events[1].vehicle_a == 0);
  CHECK(events[1].vehicle_b == 2);
  CHECK(events[2].vehicle_a == 1);
  CHECK(events[2].vehicle_b == 2);
}

TEST_CASE("neighbors: single vehicle has empty slots") {
  RoadGeometry road;
  Scene s;
  s.cav_id = 0;
  s.vehicles.push_back(vehicle(0, 1, 100.0, 30.0, road));
  const NeighborSet n = neighbors(s, 0);
  for (const auto& slot : n.slots) CHECK_FALSE(slot.has_value());
  CHECK_FALSE(n.nearest.has_value());
}

TEST_CASE("neighbors: nearest leader wins") {
  RoadGeometry road;
  Scene s;
  s.cav_id = 0;
  s.vehicles.push_back(vehicle(0, 1, 100.0, 30.0, road));
  s.vehicles.push_back(vehicle(1, 1, 110.0, 30.0, road));
  s.vehicles.push_back(vehicle(2, 1, 120.0, 30.0, road));
  const NeighborSet n = neighbors(s, 0);
  REQUIRE(n.slots[NeighborSet::kEgoLeader].has_value());
  CHECK(n.slots[NeighborSet::kEgoLeader]->id == 1);
  CHECK_FALSE(n.slots[NeighborSet::kEgoFollower].has_value());
  REQUIRE(n.nearest.has_value());
  CHECK(n.nearest->id == 1);
}

TEST_CASE("neighbors match an exhaustive scan on random scenes") {
  RoadGeometry road;
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Scene s;
    s.cav_id = 0;
    for (int i = 0; i < 10; ++i) {
      s.vehicles.push_back(vehicle(i, rng.uniform_int(road.lane_count),
                                   rng.uniform(0.0, 300.0),
                                   rng.uniform(20.0, 40.0), road));
    }
    const VehicleState& ego = s.vehicles[0];
    const NeighborSet n = neighbors(s, 0);

    // Brute-force per-slot scan.
    for (int rel = -1; rel <= 1; ++rel) {
      const int lane = ego.lane + rel;
      std::optional<VehicleState> lead, follow;
      for (const VehicleState& v : s.vehicles) {
        if (v.id == 0 || v.lane != lane) continue;
        if (v.lon >= ego.lon) {
          if (!lead || v.lon < lead->lon) lead = v;
        } else {
          if (!follow || v.lon > follow->lon) follow = v;
        }
      }
      int lead_slot = NeighborSet::kEgoLeader;
      int follow_slot = NeighborSet::kEgoFollower;
      if (rel == 1) {
        lead_slot = NeighborSet::kLeftLeader;
        follow_slot = NeighborSet::kLeftFollower;
      } else if (rel == -1) {
        lead_slot = NeighborSet::kRightLeader;
        follow_slot = NeighborSet::kRightFollower;
      }
      CHECK(n.slots[static_cast<std::size_t>(lead_slot)].has_value() ==
            lead.has_value());
      if (lead && n.slots[static_cast<std::size_t>(lead_slot)]) {
        CHECK(n.slots[static_cast<std::size_t>(lead_slot)]->id == lead->id);
      }
      CHECK(n.slots[static_cast<std::size_t>(follow_slot)].has_value() ==
            follow.has_value());
      if (follow && n.slots[static_cast<std::size_t>(follow_slot)]) {
        CHECK(n.slots[static_cast<std::size_t>(follow_slot)]->id == follow->id);
      }
    }

    // Globally nearest by Euclidean distance, ties to lowest id.
    int best = -1;
    double best_d = 1e300;
    for (const VehicleState& v : s.vehicles) {
      if (v.id == 0) continue;
      const double dx = v.lon - ego.lon;
      const double dy = v.lat - ego.lat;
      const double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = v.id;
      }
    }
    REQUIRE(n.nearest.has_value());
    CHECK(n.nearest->id == best);
  }
}

TEST_CASE("neighbors rejects unknown ids") {
  Scene s = two_vehicle_scene(30.0, 25.0, 25.0);
  CHECK_THROWS_AS(neighbors(s, 99), std::invalid_argument);
}

TEST_CASE("action decode covers the documented table") {
  CHECK(decode_action(0).accel == doctest::Approx(-4.0));
  CHECK(decode_action(0).maneuver == Maneuver::kKeep);
  CHECK(decode_action(20).accel == 0.0);
  CHECK(decode_action(30).accel == doctest::Approx(2.0));
  CHECK(decode_action(kLeftAction).maneuver == Maneuver::kLeft);
  CHECK(decode_action(kRightAction).maneuver == Maneuver::kRight);
  CHECK_THROWS_AS(decode_action(33), std::invalid_argument);
  CHECK_THROWS_AS(decode_action(-1), std::invalid_argument);
  for (int i = 1; i < kAccelActionCount; ++i) {
    CHECK(decode_action(i).accel - decode_action(i - 1).accel ==
          doctest::Approx(0.2));
  }
}
