#pragma once

#include "avstress/traffic.hpp"
#include "avstress/types.hpp"

namespace avs {

/// Intelligent Driver Model parameters. Defaults are the published-typical
/// values used for the vehicle under test.
struct IdmParams {
  double v0 = 33.33;   // desired speed, m/s
  double T = 1.5;      // time headway, s
  double a_max = 2.0;  // maximum acceleration, m/s^2
  double b = 4.0;      // comfortable deceleration, m/s^2
  double s0 = 2.0;     // jam distance, m
  double delta = 4.0;  // free-flow exponent
};

/// MOBIL lane-change parameters.
struct MobilParams {
  double politeness = 0.1;  // weight on other drivers' gains
  double b_safe = 4.0;      // max deceleration imposed on the new follower
  double a_thr = 0.2;       // incentive threshold, m/s^2
  double bias = 0.3;        // keep-right bias, m/s^2
};

/// IDM acceleration for speed v, bumper gap to the leader, and closing
/// speed dv = v - v_leader. Pass gap = +inf, dv = 0 for free flow. The
/// result is clamped to the global action range [-4, +2] m/s^2.
///
/// Throws std::domain_error on gap <= 0 (the pair has already collided).
double idm_acceleration(double v, double gap, double dv, const IdmParams& p);

/// One MOBIL decision for the ego vehicle given its surrounding traffic.
/// Evaluates both adjacent lanes: a change is proposed only when the new
/// follower keeps decel >= -b_safe, both new gaps are positive, and the
/// incentive (own gain + politeness * others' gains, biased toward the
/// right lane) exceeds a_thr. Otherwise keeps lane with IDM acceleration.
/// Safety and incentive terms use the raw IDM demand, not the actuation
/// clamp: a follower pushed to demand -90 m/s^2 must read as unsafe, not
/// as a routine full-brake.
DriverAction mobil_decision(const VehicleState& ego, const NeighborSet& nbrs,
                            const RoadGeometry& road, const MobilParams& mp,
                            const IdmParams& ip);

/// Convenience wrapper: decision of the vehicle under test in a scene.
DriverAction cav_decision(const Scene& scene, const RoadGeometry& road,
                          const MobilParams& mp, const IdmParams& ip);

}  // namespace avs
