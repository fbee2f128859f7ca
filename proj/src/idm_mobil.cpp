#include "avstress/idm_mobil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace avs {

namespace {

constexpr double kAccelMin = -4.0;
constexpr double kAccelMax = 2.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// IDM formula before the actuation clamp. Lane-change vetting needs the
/// unsaturated demand: the clamp floor equals b_safe, so a clamped value
/// could never distinguish "brakes comfortably" from "physically cannot
/// stop in time".
double idm_demand(double v, double gap, double dv, const IdmParams& p) {
  if (gap <= 0.0) {
    throw std::domain_error(
        "idm_acceleration: non-positive gap (vehicles already in contact)");
  }
  const double s_star =
      p.s0 + v * p.T + v * dv / (2.0 * std::sqrt(p.a_max * p.b));
  const double interaction = s_star / gap;  // 0 when gap is +inf
  return p.a_max *
         (1.0 - std::pow(v / p.v0, p.delta) - interaction * interaction);
}

/// IDM demand of `follower` toward an optional leader, with gaps measured
/// bumper to bumper.
double demand_toward(const VehicleState& follower,
                     const std::optional<VehicleState>& leader,
                     const IdmParams& p) {
  if (!leader.has_value()) {
    return idm_demand(follower.speed, kInf, 0.0, p);
  }
  return idm_demand(follower.speed, bbd(follower, *leader),
                    follower.speed - leader->speed, p);
}

struct LaneChangeEval {
  bool feasible = false;
  double gain = 0.0;
};

/// Safety and incentive terms for moving `ego` one lane over, before the
/// keep-right bias is applied.
LaneChangeEval evaluate_change(const VehicleState& ego,
                               const NeighborSet& nbrs, double a_ego_now,
                               int leader_slot, int follower_slot,
                               const MobilParams& mp, const IdmParams& ip) {
  LaneChangeEval out;
  const auto& new_leader = nbrs.slots[leader_slot];
  const auto& new_follower = nbrs.slots[follower_slot];

  // Positive-gap veto: changing into (or directly in front of) a vehicle
  // occupying the same stretch of road is never proposed.
  if (new_leader.has_value() && bbd(ego, *new_leader) <= 0.0) return out;
  if (new_follower.has_value() && bbd(*new_follower, ego) <= 0.0) return out;

  // Safety: the new follower must not be forced below -b_safe.
  double d_follower_new = 0.0;
  if (new_follower.has_value()) {
    const double a_nf_now = demand_toward(*new_follower, new_leader, ip);
    const double a_nf_after =
        idm_demand(new_follower->speed, bbd(*new_follower, ego),
                   new_follower->speed - ego.speed, ip);
    if (a_nf_after < -mp.b_safe) return out;
    d_follower_new = a_nf_after - a_nf_now;
  }

  // Own gain from following the target-lane leader instead.
  const double a_ego_after = idm_demand(
      ego.speed,
      new_leader.has_value() ? bbd(ego, *new_leader) : kInf,
      new_leader.has_value() ? ego.speed - new_leader->speed : 0.0, ip);
  const double d_ego = a_ego_after - a_ego_now;

  // Old follower is relieved: it closes up on the ego's former leader.
  double d_follower_old = 0.0;
  const auto& old_follower = nbrs.slots[NeighborSet::kEgoFollower];
  if (old_follower.has_value()) {
    const auto& old_leader = nbrs.slots[NeighborSet::kEgoLeader];
    const double a_of_now =
        idm_demand(old_follower->speed, bbd(*old_follower, ego),
                   old_follower->speed - ego.speed, ip);
    const double a_of_after = demand_toward(*old_follower, old_leader, ip);
    d_follower_old = a_of_after - a_of_now;
  }

  out.feasible = true;
  out.gain = d_ego + mp.politeness * (d_follower_new + d_follower_old);
  return out;
}

}  // namespace

double idm_acceleration(double v, double gap, double dv, const IdmParams& p) {
  return std::clamp(idm_demand(v, gap, dv, p), kAccelMin, kAccelMax);
}

DriverAction mobil_decision(const VehicleState& ego, const NeighborSet& nbrs,
                            const RoadGeometry& road, const MobilParams& mp,
                            const IdmParams& ip) {
  // Demand drives the comparison terms; the actuated keep acceleration is
  // clamped to the action range at the end.
  const double a_keep =
      demand_toward(ego, nbrs.slots[NeighborSet::kEgoLeader], ip);

  double best_gain = -kInf;
  Maneuver best = Maneuver::kKeep;

  if (road.valid_lane(ego.lane + 1)) {
    const LaneChangeEval left =
        evaluate_change(ego, nbrs, a_keep, NeighborSet::kLeftLeader,
                        NeighborSet::kLeftFollower, mp, ip);
    const double gain = left.gain - mp.bias;
    if (left.feasible && gain > mp.a_thr && gain > best_gain) {
      best_gain = gain;
      best = Maneuver::kLeft;
    }
  }
  if (road.valid_lane(ego.lane - 1)) {
    const LaneChangeEval right =
        evaluate_change(ego, nbrs, a_keep, NeighborSet::kRightLeader,
                        NeighborSet::kRightFollower, mp, ip);
    const double gain = right.gain + mp.bias;
    // >= so an exact tie resolves toward the right lane, matching the
    // keep-right convention.
    if (right.feasible && gain > mp.a_thr && gain >= best_gain) {
      best_gain = gain;
      best = Maneuver::kRight;
    }
  }

  if (best == Maneuver::kKeep) {
    return {Maneuver::kKeep, std::clamp(a_keep, kAccelMin, kAccelMax)};
  }
  return {best, 0.0};
}

DriverAction cav_decision(const Scene& scene, const RoadGeometry& road,
                          const MobilParams& mp, const IdmParams& ip) {
  const VehicleState& ego = scene.cav();
  return mobil_decision(ego, neighbors(scene, ego.id), road, mp, ip);
}

}  // namespace avs
