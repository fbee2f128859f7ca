#include "avstress/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "avstress/errors.hpp"
#include "avstress/traffic.hpp"

namespace avs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kSpawnAttempts = 1000;
constexpr int kRespawnAttempts = 20;
constexpr double kRespawnSetback = 10.0;  // m inside the despawn boundary
constexpr double kMaxBrake = 4.0;         // strongest action deceleration

double clip_pos(double x) {
  return std::clamp(x, -kObservationClip, kObservationClip);
}

/// Bumper gap and closing state of a vehicle toward its same-lane leader,
/// as the empirical action table expects them.
struct LeadState {
  double range = kInf;
  double range_rate = 0.0;
};

LeadState lead_state(const Scene& scene, int id) {
  const NeighborSet nb = neighbors(scene, id);
  const auto& leader = nb.slots[NeighborSet::kEgoLeader];
  if (!leader.has_value()) return {};
  const VehicleState& ego = scene.by_id(id);
  return {bbd(ego, *leader), leader->speed - ego.speed};
}

/// Initial-placement headway rule: every same-lane pair keeps
/// bbd >= follower speed * headway seconds.
bool placement_ok(const VehicleState& cand,
                  const std::vector<VehicleState>& placed, double headway) {
  for (const VehicleState& other : placed) {
    if (other.lane != cand.lane) continue;
    const VehicleState& follower = (cand.lon <= other.lon) ? cand : other;
    const VehicleState& leader = (cand.lon <= other.lon) ? other : cand;
    const double gap = bbd(follower, leader);
    if (gap <= 0.0 || gap < follower.speed * headway) return false;
    // A placement is only fair if full braking can absorb the speed
    // difference; otherwise the initial conditions decide the episode
    // before anyone acts.
    const double closing = follower.speed - leader.speed;
    if (closing > 0.0 && gap < closing * closing / (2.0 * kMaxBrake) + 2.0) {
      return false;
    }
  }
  return true;
}

}  // namespace

const char* env_mode_name(EnvMode mode) {
  return mode == EnvMode::kUnbounded ? "unbounded" : "ndd_bounded";
}

std::optional<EnvMode> env_mode_from_name(const std::string& name) {
  if (name == "unbounded") return EnvMode::kUnbounded;
  if (name == "ndd_bounded") return EnvMode::kNddBounded;
  return std::nullopt;
}

void EnvConfig::validate() const {
  if (road.lane_count < 2 || road.lane_count > 5) {
    throw ConfigError("env: lane_count must be in [2, 5]");
  }
  if (road.lane_width <= 0.0 || road.length <= 0.0) {
    throw ConfigError("env: road dimensions must be positive");
  }
  if (bv_count < 1) throw ConfigError("env: bv_count must be >= 1");
  if (horizon < 1) throw ConfigError("env: horizon must be >= 1");
  if (dt <= 0.0 || sub_dt <= 0.0 || sub_dt > dt) {
    throw ConfigError("env: need 0 < sub_dt <= dt");
  }
  if (maneuver_duration <= 0.0) {
    throw ConfigError("env: maneuver_duration must be positive");
  }
  if (spawn_speed_lo < 0.0 || spawn_speed_hi <= spawn_speed_lo) {
    throw ConfigError("env: bad spawn speed range");
  }
  if (spawn_headway < 0.0) throw ConfigError("env: spawn_headway < 0");
  if (despawn_range <= 0.0) throw ConfigError("env: despawn_range <= 0");
}

std::vector<double> encode_observation(const Scene& scene,
                                       int controlled_id) {
  const VehicleState& bv = scene.by_id(controlled_id);
  const VehicleState& cav = scene.cav();

  std::vector<double> obs(kObservationSize, 0.0);
  obs[0] = bv.speed;
  obs[1 + std::clamp(bv.lane, 0, 4)] = 1.0;
  obs[6] = clip_pos(cav.lon - bv.lon);
  obs[7] = clip_pos(cav.lat - bv.lat);
  obs[8] = cav.speed - bv.speed;
  obs[9] = cav.heading;

  const NeighborSet nb = neighbors(scene, scene.cav_id);
  for (int slot = 0; slot < 6; ++slot) {
    const auto& v = nb.slots[slot];
    if (!v.has_value()) continue;
    const int base = 10 + slot * 4;
    obs[base] = 1.0;
    obs[base + 1] = clip_pos(v->lon - cav.lon);
    obs[base + 2] = clip_pos(v->lat - cav.lat);
    obs[base + 3] = v->speed - cav.speed;
  }
  return obs;
}

std::vector<double> observation_scale() {
  constexpr double kSpeed = 1.0 / 40.0;
  constexpr double kPos = 1.0 / kObservationClip;
  std::vector<double> scale(kObservationSize, 1.0);
  scale[0] = kSpeed;
  scale[6] = kPos;
  scale[7] = kPos;
  scale[8] = kSpeed;
  for (int slot = 0; slot < 6; ++slot) {
    const int base = 10 + slot * 4;
    scale[base + 1] = kPos;
    scale[base + 2] = kPos;
    scale[base + 3] = kSpeed;
  }
  return scale;
}

double compute_reward(const Scene& prev, const Scene& next,
                      int controlled_id) {
  (void)prev;
  (void)controlled_id;
  const std::vector<CrashEvent> events = detect_crash(next);
  if (events.empty()) return 0.0;
  for (const CrashEvent& ev : events) {
    if (ev.vehicle_a == next.cav_id || ev.vehicle_b == next.cav_id) {
      return 1.0;
    }
  }
  return -1.0;
}

std::array<bool, kActionCount> action_mask(const Scene& scene,
                                           int controlled_id,
                                           const NddTable& table,
                                           const RoadGeometry& road) {
  const VehicleState& bv = scene.by_id(controlled_id);
  const LeadState lead = lead_state(scene, controlled_id);
  const std::array<bool, kActionCount> support =
      table.support(bv.speed, lead.range, lead.range_rate);

  std::array<bool, kActionCount> masked = support;
  if (!road.valid_lane(bv.lane + 1)) masked[kLeftAction] = false;
  if (!road.valid_lane(bv.lane - 1)) masked[kRightAction] = false;

  for (bool allowed : masked) {
    if (allowed) return masked;
  }
  // Support consisted solely of off-road lane changes. Those execute as
  // physical no-ops, so the raw support stays the draw set rather than
  // substituting an action of empirical probability zero.
  return support;
}

HighwayEnv::HighwayEnv(const EnvConfig& cfg, const NddTable* table)
    : cfg_(cfg), table_(table), rng_(0) {
  cfg_.validate();
  if (table_ == nullptr) {
    throw std::invalid_argument("HighwayEnv: action table is required");
  }
}

void HighwayEnv::spawn(std::uint64_t seed) {
  rng_ = Rng(seed);
  scene_ = Scene{};
  scene_.time = 0.0;
  scene_.cav_id = 0;

  VehicleState cav;
  cav.id = 0;
  cav.lane = cfg_.road.lane_count / 2;
  cav.lon = 0.5 * cfg_.road.length;
  cav.lat = cfg_.road.lane_center(cav.lane);
  cav.speed = rng_.uniform(cfg_.spawn_speed_lo, cfg_.spawn_speed_hi);
  scene_.vehicles.push_back(cav);

  const double lo = std::max(0.0, cav.lon - cfg_.despawn_range);
  const double hi = std::min(cfg_.road.length, cav.lon + cfg_.despawn_range);
  for (int i = 1; i <= cfg_.bv_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
      VehicleState bv;
      bv.id = i;
      bv.lane = rng_.uniform_int(cfg_.road.lane_count);
      bv.lon = rng_.uniform(lo, hi);
      bv.lat = cfg_.road.lane_center(bv.lane);
      bv.speed = rng_.uniform(cfg_.spawn_speed_lo, cfg_.spawn_speed_hi);
      if (!placement_ok(bv, scene_.vehicles, cfg_.spawn_headway)) continue;
      scene_.vehicles.push_back(bv);
      placed = true;
      break;
    }
    if (!placed) {
      throw ConfigError(
          "env: could not place all background vehicles (corridor too "
          "dense)");
    }
  }
}

std::vector<double> HighwayEnv::reset(std::uint64_t seed) {
  spawn(seed);
  steps_ = 0;
  done_ = false;
  crash_.reset();
  events_.clear();
  controlled_id_ = pick_controlled();
  return encode_observation(scene_, controlled_id_);
}

int HighwayEnv::pick_controlled() const {
  const VehicleState& cav = scene_.cav();
  int best_id = -1;
  double best = kInf;
  for (const VehicleState& v : scene_.vehicles) {
    if (v.id == scene_.cav_id) continue;
    const double dx = v.lon - cav.lon;
    const double dy = v.lat - cav.lat;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist < best) {  // id order makes ties resolve to the lowest id
      best = dist;
      best_id = v.id;
    }
  }
  return best_id;
}

DriverAction HighwayEnv::bv_action(const VehicleState& bv) {
  const LeadState lead = lead_state(scene_, bv.id);
  const int action =
      table_->sample(bv.speed, lead.range, lead.range_rate, rng_);
  return decode_action(action);
}

StepOutcome HighwayEnv::step(int action) {
  if (controlled_id_ < 0) throw StateError("env: reset before stepping");
  if (done_) throw StateError("env: episode already finished");
  if (action < 0 || action >= kActionCount) {
    throw std::invalid_argument("env: action index out of range");
  }

  // All vehicles commit to a decision from the same snapshot, in id order
  // (the uncontrolled draws consume the environment RNG stream
  // deterministically).
  std::vector<DriverAction> decisions;
  decisions.reserve(scene_.vehicles.size());
  for (const VehicleState& v : scene_.vehicles) {
    if (v.id == scene_.cav_id) {
      decisions.push_back(cav_decision(scene_, cfg_.road, cfg_.cav_mobil,
                                       cfg_.cav_idm));
    } else if (v.id == controlled_id_) {
      decisions.push_back(decode_action(action));
    } else {
      decisions.push_back(bv_action(v));
    }
  }

  const double t0 = scene_.time;
  const int substeps =
      std::max(1, static_cast<int>(std::lround(cfg_.dt / cfg_.sub_dt)));
  const double sub = cfg_.dt / substeps;

  Scene cur = scene_;
  StepOutcome out;
  for (int k = 1; k <= substeps; ++k) {
    Scene next;
    next.cav_id = cur.cav_id;
    next.time = (k == substeps) ? (t0 + cfg_.dt) : (t0 + k * sub);
    next.vehicles.reserve(cur.vehicles.size());
    for (std::size_t i = 0; i < cur.vehicles.size(); ++i) {
      next.vehicles.push_back(advance_vehicle(cur.vehicles[i], decisions[i],
                                              sub, cfg_.road,
                                              cfg_.maneuver_duration));
    }
    cur = std::move(next);
    std::vector<CrashEvent> events = detect_crash(cur);
    if (!events.empty()) {
      out.reward = compute_reward(scene_, cur, controlled_id_);
      events_ = std::move(events);
      // Prefer the event involving the vehicle under test; events come
      // sorted by id pair, so the first such entry is canonical.
      crash_ = events_.front();
      for (const CrashEvent& ev : events_) {
        if (ev.vehicle_a == cur.cav_id || ev.vehicle_b == cur.cav_id) {
          crash_ = ev;
          break;
        }
      }
      scene_ = std::move(cur);
      done_ = true;
      out.done = true;
      out.observation = encode_observation(scene_, controlled_id_);
      return out;
    }
  }

  scene_ = std::move(cur);
  ++steps_;
  respawn_remote_vehicles();
  controlled_id_ = pick_controlled();

  out.reward = 0.0;
  out.done = steps_ >= cfg_.horizon;
  done_ = out.done;
  out.observation = encode_observation(scene_, controlled_id_);
  return out;
}

void HighwayEnv::respawn_remote_vehicles() {
  const VehicleState cav = scene_.cav();
  for (VehicleState& v : scene_.vehicles) {
    if (v.id == scene_.cav_id) continue;
    if (std::abs(v.lon - cav.lon) <= cfg_.despawn_range) continue;
    const bool exited_ahead = v.lon > cav.lon;
    for (int attempt = 0; attempt < kRespawnAttempts; ++attempt) {
      VehicleState cand = v;
      cand.lane = rng_.uniform_int(cfg_.road.lane_count);
      cand.lat = cfg_.road.lane_center(cand.lane);
      cand.speed = rng_.uniform(cfg_.spawn_speed_lo, cfg_.spawn_speed_hi);
      cand.heading = 0.0;
      // A vehicle that pulled ahead re-enters behind the pack and one
      // that fell behind re-enters ahead, just inside the kept window.
      cand.lon = exited_ahead
                     ? cav.lon - (cfg_.despawn_range - kRespawnSetback)
                     : cav.lon + (cfg_.despawn_range - kRespawnSetback);
      std::vector<VehicleState> others;
      others.reserve(scene_.vehicles.size() - 1);
      for (const VehicleState& o : scene_.vehicles) {
        if (o.id != v.id) others.push_back(o);
      }
      if (!placement_ok(cand, others, cfg_.spawn_headway)) continue;
      v = cand;
      break;
    }
    // All attempts blocked: the vehicle stays put and is reconsidered
    // after the next step.
  }
}

std::uint64_t HighwayEnv::action_mask() const {
  if (controlled_id_ < 0) throw StateError("env: reset before querying mask");
  if (cfg_.mode == EnvMode::kNddBounded) {
    return pack_mask(
        avs::action_mask(scene_, controlled_id_, *table_, cfg_.road));
  }
  std::array<bool, kActionCount> all{};
  all.fill(true);
  const VehicleState& bv = scene_.by_id(controlled_id_);
  if (!cfg_.road.valid_lane(bv.lane + 1)) all[kLeftAction] = false;
  if (!cfg_.road.valid_lane(bv.lane - 1)) all[kRightAction] = false;
  return pack_mask(all);
}

}  // namespace avs
