#pragma once

#include <array>
#include <optional>
#include <vector>

#include "avstress/types.hpp"

namespace avs {

/// Kinematic step of one vehicle under one action.
///
/// Keep-lane: speed integrates the commanded acceleration and clamps at
/// zero; the longitudinal advance uses exact piecewise kinematics when the
/// vehicle stops mid-step. Lane changes hold speed constant and move the
/// lateral position linearly toward the target lane center at a rate of
/// lane_width / maneuver_duration, with the heading set to
/// atan2(lateral rate, speed) while the maneuver is in progress. A lane
/// change with no lane on that side degrades to keep with zero
/// acceleration.
///
/// Throws std::invalid_argument on non-finite inputs or dt <= 0.
VehicleState advance_vehicle(const VehicleState& state,
                             const DriverAction& action, double dt,
                             const RoadGeometry& road,
                             double maneuver_duration = 1.0);

/// All pairwise overlaps of oriented vehicle rectangles in the scene.
/// One event per overlapping pair, ordered by (id_a, id_b) with
/// id_a < id_b.
std::vector<CrashEvent> detect_crash(const Scene& scene);

/// Bumper-to-bumper distance: longitudinal center gap minus both half
/// lengths. Negative when the bodies overlap longitudinally.
double bbd(const VehicleState& follower, const VehicleState& leader);

/// Time to collision: bbd / closing speed when the follower is closing,
/// nullopt otherwise (no collision course).
std::optional<double> ttc(const VehicleState& follower,
                          const VehicleState& leader);

/// Nearest traffic around one vehicle, one leader/follower slot per lane
/// (ego, left, right) plus the globally nearest vehicle.
struct NeighborSet {
  enum Slot {
    kEgoLeader = 0,
    kEgoFollower = 1,
    kLeftLeader = 2,
    kLeftFollower = 3,
    kRightLeader = 4,
    kRightFollower = 5,
  };
  std::array<std::optional<VehicleState>, 6> slots;
  std::optional<VehicleState> nearest;  // Euclidean, ties to lowest id
};

/// Throws std::invalid_argument on unknown id. A vehicle with the same
/// longitudinal position as the ego counts as a leader.
NeighborSet neighbors(const Scene& scene, int id);

}  // namespace avs
