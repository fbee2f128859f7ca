#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace avs {

enum class Maneuver : std::uint8_t { kKeep = 0, kLeft = 1, kRight = 2 };

const char* maneuver_name(Maneuver m);
std::optional<Maneuver> maneuver_from_name(const std::string& name);

/// One decision of a driver model: either keep the lane with a given
/// acceleration, or start a lane change (acceleration is ignored then).
struct DriverAction {
  Maneuver maneuver = Maneuver::kKeep;
  double accel = 0.0;  // m/s^2, used only when maneuver == kKeep
};

/// Straight multi-lane corridor. Lane 0 is the rightmost lane; lateral
/// positions are measured from the road centerline, positive to the left.
struct RoadGeometry {
  int lane_count = 3;
  double lane_width = 4.0;  // m
  double length = 400.0;    // spawn corridor, m

  double lane_center(int lane) const {
    return (lane - 0.5 * (lane_count - 1)) * lane_width;
  }
  bool valid_lane(int lane) const { return lane >= 0 && lane < lane_count; }
};

struct VehicleState {
  int id = 0;
  int lane = 0;
  double lon = 0.0;      // m along the road
  double lat = 0.0;      // m from road centerline
  double speed = 0.0;    // m/s, never negative
  double heading = 0.0;  // rad, 0 = road direction, clamped to [-pi/4, pi/4]
  double length = 5.0;   // m
  double width = 2.0;    // m
};

/// Snapshot of all vehicles at one instant. Vehicles are kept sorted by id.
struct Scene {
  double time = 0.0;
  std::vector<VehicleState> vehicles;
  int cav_id = 0;

  const VehicleState* find(int id) const;
  const VehicleState& cav() const;
  const VehicleState& by_id(int id) const;  // throws on unknown id
};

/// Two overlapping vehicle rectangles at a given time. Offsets are the
/// position of b's center relative to a's center in road coordinates.
struct CrashEvent {
  double time = 0.0;
  int vehicle_a = 0;
  int vehicle_b = 0;
  double relative_heading = 0.0;  // heading_b - heading_a, rad
  double contact_lon = 0.0;       // m
  double contact_lat = 0.0;       // m
};

/// Per-decision-step record of what the controlled background vehicle did.
struct ActionRecord {
  double time = 0.0;
  int controlled_id = 0;
  int action = 0;            // index into the 33-action set
  std::uint64_t mask = 0;    // bit i set = action i was allowed at selection
};

}  // namespace avs
