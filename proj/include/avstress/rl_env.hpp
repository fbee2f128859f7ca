#pragma once

#include <cstdint>
#include <vector>

namespace avs {

struct StepOutcome {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

/// Episodic discrete-action environment as seen by the learner. Action
/// legality is exposed as a bitmask (bit i = action i selectable now).
class RlEnv {
 public:
  virtual ~RlEnv() = default;

  virtual int observation_size() const = 0;
  virtual int action_count() const = 0;

  /// Starts a fresh episode and returns the initial observation.
  virtual std::vector<double> reset(std::uint64_t seed) = 0;

  /// Advances one decision step. Throws StateError when the episode is
  /// already done.
  virtual StepOutcome step(int action) = 0;

  /// Mask of currently selectable actions; never zero while the episode
  /// is running.
  virtual std::uint64_t action_mask() const = 0;
};

}  // namespace avs
