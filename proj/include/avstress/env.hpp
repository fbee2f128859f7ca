#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "avstress/action_space.hpp"
#include "avstress/idm_mobil.hpp"
#include "avstress/ndd.hpp"
#include "avstress/rl_env.hpp"
#include "avstress/rng.hpp"
#include "avstress/types.hpp"

namespace avs {

enum class EnvMode { kUnbounded, kNddBounded };

const char* env_mode_name(EnvMode mode);
std::optional<EnvMode> env_mode_from_name(const std::string& name);

struct EnvConfig {
  RoadGeometry road;
  int bv_count = 6;
  double spawn_speed_lo = 20.0;  // m/s
  double spawn_speed_hi = 40.0;
  int horizon = 30;           // decision steps
  double dt = 1.0;            // s per decision step
  double sub_dt = 0.1;        // collision-check sub-step, s
  double maneuver_duration = 1.0;  // lane-change duration, s
  double spawn_headway = 1.0;      // min initial bbd = speed * this, s
  double despawn_range = 120.0;    // keep BVs within this of the CAV, m
  EnvMode mode = EnvMode::kUnbounded;
  IdmParams cav_idm;
  MobilParams cav_mobil;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Length of the policy observation vector: controlled speed, lane
/// one-hot (up to 5 lanes), 4-value block for the vehicle under test,
/// and 4 values per surrounding-traffic slot.
inline constexpr int kObservationSize = 1 + 5 + 4 + 6 * 4;
inline constexpr double kObservationClip = 120.0;  // m

/// Deterministic observation layout for the controlled vehicle; same
/// scene, same vector. Throws std::invalid_argument on unknown id.
std::vector<double> encode_observation(const Scene& scene, int controlled_id);

/// Per-entry multipliers that bring every observation component to order
/// one: speeds by 1/40 (m/s), positions by one over the 120 m clip range,
/// one-hot, presence and heading entries unchanged. Intended as the
/// network input scaling.
std::vector<double> observation_scale();

/// Reward of the transition into `next`: +1 when any background vehicle
/// is in contact with the vehicle under test, -1 when only background
/// vehicles collided, 0 otherwise.
double compute_reward(const Scene& prev, const Scene& next,
                      int controlled_id);

/// Action legality in the bounded mode: empirical-support entries of the
/// controlled vehicle's binned state, with off-road lane changes removed.
/// When that removal would empty the mask, the raw support is returned
/// unchanged (the off-road change is a physical no-op, but the action
/// stays drawable from its nonzero-probability set).
std::array<bool, kActionCount> action_mask(const Scene& scene,
                                           int controlled_id,
                                           const NddTable& table,
                                           const RoadGeometry& road);

/// The highway MDP: one controlled background vehicle, remaining traffic
/// driven by the empirical action table, the vehicle under test driven by
/// its car-following and lane-change models. Not thread-safe; run one
/// instance per thread.
class HighwayEnv final : public RlEnv {
 public:
  /// The table drives uncontrolled background traffic in every mode and
  /// must outlive the environment.
  HighwayEnv(const EnvConfig& cfg, const NddTable* table);

  int observation_size() const override { return kObservationSize; }
  int action_count() const override { return kActionCount; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepOutcome step(int action) override;
  std::uint64_t action_mask() const override;

  const EnvConfig& config() const { return cfg_; }
  const Scene& scene() const { return scene_; }
  int controlled_id() const { return controlled_id_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  const std::optional<CrashEvent>& crash() const { return crash_; }
  /// All overlaps found at the crash instant (may exceed one).
  const std::vector<CrashEvent>& crash_events() const { return events_; }

 private:
  void spawn(std::uint64_t seed);
  void respawn_remote_vehicles();
  int pick_controlled() const;
  DriverAction bv_action(const VehicleState& bv);

  EnvConfig cfg_;
  const NddTable* table_;
  Rng rng_;
  Scene scene_;
  int controlled_id_ = -1;
  int steps_ = 0;
  bool done_ = true;
  std::optional<CrashEvent> crash_;
  std::vector<CrashEvent> events_;
};

}  // namespace avs
