#include "avstress/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "avstress/geometry.hpp"

namespace avs {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxHeading = kPi / 4.0;

bool finite(double x) { return std::isfinite(x); }

}  // namespace

VehicleState advance_vehicle(const VehicleState& state,
                             const DriverAction& action, double dt,
                             const RoadGeometry& road,
                             double maneuver_duration) {
  if (!finite(state.lon) || !finite(state.lat) || !finite(state.speed) ||
      !finite(state.heading) || !finite(action.accel) || !finite(dt)) {
    throw std::invalid_argument("advance_vehicle: non-finite input");
  }
  if (dt <= 0.0) {
    throw std::invalid_argument("advance_vehicle: dt must be positive");
  }
  if (maneuver_duration <= 0.0) {
    throw std::invalid_argument(
        "advance_vehicle: maneuver_duration must be positive");
  }

  VehicleState out = state;

  Maneuver maneuver = action.maneuver;
  if (maneuver == Maneuver::kLeft && !road.valid_lane(state.lane + 1)) {
    maneuver = Maneuver::kKeep;
  } else if (maneuver == Maneuver::kRight && !road.valid_lane(state.lane - 1)) {
    maneuver = Maneuver::kKeep;
  }

  if (maneuver == Maneuver::kKeep) {
    const double a = action.accel;
    const double v0 = state.speed;
    double v1 = v0 + a * dt;
    double advance;
    if (v1 < 0.0) {
      // Decelerating to a stop mid-step: travel only until the speed hits
      // zero, then hold position.
      const double t_stop = (a < 0.0) ? (-v0 / a) : 0.0;
      advance = v0 * t_stop + 0.5 * a * t_stop * t_stop;
      v1 = 0.0;
    } else {
      advance = v0 * dt + 0.5 * a * dt * dt;
    }
    out.lon = state.lon + advance;
    out.speed = v1;

    // Continue any lane change already in progress: drift toward the
    // current lane's center at the maneuver rate.
    const double target = road.lane_center(state.lane);
    const double remaining = target - state.lat;
    const double rate = road.lane_width / maneuver_duration;
    const double step = rate * dt;
    if (std::abs(remaining) <= step + 1e-9) {
      out.lat = target;
      out.heading = 0.0;
    } else {
      const double dir = (remaining > 0.0) ? 1.0 : -1.0;
      out.lat = state.lat + dir * step;
      out.heading = std::clamp(std::atan2(dir * rate, state.speed),
                               -kMaxHeading, kMaxHeading);
    }
    return out;
  }

  // Lane change: speed held constant, lateral motion toward the target
  // lane center.
  const int target_lane =
      state.lane + ((maneuver == Maneuver::kLeft) ? 1 : -1);
  const double target = road.lane_center(target_lane);
  out.lon = state.lon + state.speed * dt;
  const double remaining = target - state.lat;
  const double rate = road.lane_width / maneuver_duration;
  const double step = rate * dt;
  if (std::abs(remaining) <= step + 1e-9) {
    out.lat = target;
    out.lane = target_lane;
    out.heading = 0.0;
  } else {
    // Mid-maneuver: the lane field flips only on arrival so that applying
    // the same lane-change action across collision sub-steps keeps a
    // stable target.
    const double dir = (remaining > 0.0) ? 1.0 : -1.0;
    out.lat = state.lat + dir * step;
    out.heading = std::clamp(std::atan2(dir * rate, state.speed),
                             -kMaxHeading, kMaxHeading);
  }
  return out;
}

std::vector<CrashEvent> detect_crash(const Scene& scene) {
  std::vector<CrashEvent> events;
  const auto& vs = scene.vehicles;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const OrientedRect ra = OrientedRect::from_vehicle(vs[i]);
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const OrientedRect rb = OrientedRect::from_vehicle(vs[j]);
      if (!rects_overlap(ra, rb)) continue;
      CrashEvent ev;
      ev.time = scene.time;
      ev.vehicle_a = vs[i].id;
      ev.vehicle_b = vs[j].id;
      ev.relative_heading = vs[j].heading - vs[i].heading;
      ev.contact_lon = vs[j].lon - vs[i].lon;
      ev.contact_lat = vs[j].lat - vs[i].lat;
      events.push_back(ev);
    }
  }
  return events;
}

double bbd(const VehicleState& follower, const VehicleState& leader) {
  return (leader.lon - follower.lon) -
         0.5 * (leader.length + follower.length);
}

std::optional<double> ttc(const VehicleState& follower,
                          const VehicleState& leader) {
  const double closing = follower.speed - leader.speed;
  if (closing <= 0.0) return std::nullopt;
  return bbd(follower, leader) / closing;
}

NeighborSet neighbors(const Scene& scene, int id) {
  const VehicleState& ego = scene.by_id(id);
  NeighborSet out;

  double best_dist = std::numeric_limits<double>::infinity();
  for (const VehicleState& v : scene.vehicles) {
    if (v.id == id) continue;

    // Globally nearest by Euclidean distance, ties to the lowest id
    // (vehicles are scanned in id order).
    const double dx = v.lon - ego.lon;
    const double dy = v.lat - ego.lat;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist < best_dist) {
      best_dist = dist;
      out.nearest = v;
    }

    int base;
    if (v.lane == ego.lane) {
      base = NeighborSet::kEgoLeader;
    } else if (v.lane == ego.lane + 1) {
      base = NeighborSet::kLeftLeader;
    } else if (v.lane == ego.lane - 1) {
      base = NeighborSet::kRightLeader;
    } else {
      continue;
    }
    const bool is_leader = v.lon >= ego.lon;
    const int slot = base + (is_leader ? 0 : 1);
    const double gap = std::abs(v.lon - ego.lon);
    auto& cur = out.slots[slot];
    if (!cur.has_value() || gap < std::abs(cur->lon - ego.lon)) {
      cur = v;
    }
  }
  return out;
}

}  // namespace avs
