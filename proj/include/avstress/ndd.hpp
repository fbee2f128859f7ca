#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "avstress/action_space.hpp"
#include "avstress/idm_mobil.hpp"
#include "avstress/rng.hpp"

namespace avs {

/// One observed driver step: the state a vehicle saw and the discrete
/// action it took. `range` is the bumper gap to the lead vehicle (+inf
/// when there is none) and `range_rate` = v_lead - v_ego.
struct TrajectoryRecord {
  int vehicle_id = 0;
  double time = 0.0;
  double speed = 0.0;
  double range = 0.0;
  double range_rate = 0.0;
  int action = kZeroAccelAction;
};

/// Nearest discrete acceleration index (0..30) for a raw acceleration.
int snap_accel_index(double accel);

/// Text trajectory log: one CSV row per record.
void write_trajectory_header(std::ostream& out);
void append_trajectory(std::ostream& out, const TrajectoryRecord& rec);

/// Streaming reader over a trajectory log; returns the record count.
/// Throws std::runtime_error on malformed rows.
std::size_t for_each_trajectory(
    std::istream& in, const std::function<void(const TrajectoryRecord&)>& fn);

/// Discretization of the (speed, range, range-rate) state for the
/// empirical action table. Ranges at or beyond range_hi fall into a
/// dedicated unbounded bin; speed and range-rate clamp into their edge
/// bins on lookup.
struct BinSpec {
  double speed_lo = 20.0;
  double speed_hi = 40.0;
  double speed_step = 2.0;
  double range_lo = 0.0;
  double range_hi = 120.0;
  double range_step = 10.0;
  double rate_lo = -10.0;
  double rate_hi = 10.0;
  double rate_step = 2.0;

  int speed_bins() const;
  int range_bins() const;  // includes the unbounded top bin
  int rate_bins() const;
  int total_bins() const;

  /// Flat bin index; total over all real-valued inputs.
  int bin_of(double speed, double range, double range_rate) const;

  /// True when the speed lies inside the calibration window
  /// [speed_lo, speed_hi).
  bool speed_in_window(double speed) const;

  bool operator==(const BinSpec&) const = default;
};

/// Calibrated empirical distribution P(action | binned state).
/// Immutable after calibration; sampling takes a caller-owned RNG.
class NddTable {
 public:
  NddTable() = default;
  NddTable(const BinSpec& bins, std::vector<double> probs,
           std::vector<std::uint64_t> counts);

  const BinSpec& bins() const { return bins_; }
  std::uint64_t bin_count(int bin) const { return counts_.at(bin); }
  bool bin_empty(int bin) const { return counts_.at(bin) == 0; }
  std::uint64_t total_count() const;

  /// Probability of one action in one bin. Empty bins report the default
  /// distribution (probability 1 on keep-lane / zero acceleration).
  double probability(int bin, int action) const;

  /// Inverse-CDF draw of an action index for the binned state.
  int sample(int bin, Rng& rng) const;
  int sample(double speed, double range, double range_rate, Rng& rng) const;

  /// Support indicator per action: true iff probability > 0.
  std::array<bool, kActionCount> support(int bin) const;
  std::array<bool, kActionCount> support(double speed, double range,
                                         double range_rate) const;

  /// FNV-1a 64 over the canonical serialized body; stable across
  /// save/load round-trips.
  std::uint64_t checksum() const;

  void save(const std::string& path) const;
  /// Throws MissingInputError when the file does not exist and
  /// std::runtime_error on format, normalization, or checksum problems.
  static NddTable load(const std::string& path);

 private:
  std::string serialize_body() const;

  BinSpec bins_;
  std::vector<double> probs_;           // total_bins * kActionCount
  std::vector<std::uint64_t> counts_;   // per-bin sample counts
};

/// Pack/unpack an action support vector into the low 33 bits of a word.
std::uint64_t pack_mask(const std::array<bool, kActionCount>& support);
std::array<bool, kActionCount> unpack_mask(std::uint64_t mask);

/// Build the table from observed records: keep records inside the speed
/// window, bin them, count actions, normalize. Throws
/// std::invalid_argument when no record survives the filter.
NddTable calibrate_ndd(const std::vector<TrajectoryRecord>& records,
                       const BinSpec& bins);
NddTable calibrate_ndd(std::istream& records, const BinSpec& bins);

/// Synthetic stand-in for naturalistic logs: car-following episodes under
/// a noisy IDM with occasional random lane changes, leader speeds doing a
/// bounded random walk, and a fraction of free-flow (leaderless) contexts.
/// An `approach_fraction` of the drawn traffic contexts start close and
/// closing fast, so the emergency-braking corner of the state space is
/// populated with the hard decelerations a real driver would produce
/// there. Defaults yield ~3e6 records.
struct SynthConfig {
  int episodes = 6000;
  int steps_per_episode = 500;
  double dt = 1.0;
  double accel_noise_sd = 0.2;
  double lane_change_prob = 0.0005;
  double leaderless_fraction = 0.15;
  double approach_fraction = 0.3;
  IdmParams idm;
};

/// Writes records to `out` (header included); returns the record count.
std::size_t synth_trajectories(const SynthConfig& cfg, std::uint64_t seed,
                               std::ostream& out);

}  // namespace avs
