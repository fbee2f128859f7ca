#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avstress/network.hpp"
#include "avstress/replay.hpp"
#include "avstress/rl_env.hpp"

namespace avs {

/// Training hyper-parameters. The defaults are the experiment values:
/// batch 16, replay capacity 1e6, gamma 1, learning rate 1e-6, epsilon
/// 1.0 -> 0.1, replay warm-up 5000, target sync every 1000 updates.
struct TrainConfig {
  int batch = 16;
  std::size_t capacity = 1000000;
  double gamma = 1.0;
  double lr = 1e-6;
  double eps_initial = 1.0;
  double eps_final = 0.1;
  std::size_t replay_start = 5000;
  std::size_t target_update = 1000;
  std::size_t total_steps = 100000;
  std::size_t eps_anneal_steps = 0;   // 0 = first 10% of total_steps
  std::size_t checkpoint_every = 0;   // env steps; 0 = final only

  std::size_t resolved_anneal_steps() const {
    return eps_anneal_steps > 0 ? eps_anneal_steps
                                : std::max<std::size_t>(1, total_steps / 10);
  }
  double eps_at(std::size_t env_step) const;

  void validate() const;  // throws ConfigError
};

/// One SGD step on the mean-squared TD error of a batch; returns the
/// loss. Throws std::runtime_error when the loss is not finite.
double td_update(Network& online, const Network& target,
                 std::span<const Transition* const> batch, double gamma,
                 double lr);

/// One line of the training log, recorded per finished episode.
struct TrainLogEntry {
  std::size_t step = 0;      // cumulative env steps
  std::size_t episode = 0;   // episode index, 0-based
  double episode_return = 0.0;
  double rolling_crash_rate = 0.0;  // over the trailing window
  double eps = 0.0;
  double loss = 0.0;  // most recent update loss (0 before first update)
};

struct TrainResult {
  Network online;
  Network target;
  TrainConfig config;
  std::size_t env_steps = 0;
  std::size_t updates = 0;
  std::size_t episodes = 0;
  std::vector<TrainLogEntry> log;  // this run only; not checkpointed
};

struct TrainHooks {
  /// Called at every checkpoint_every boundary and once at the end.
  std::function<void(const TrainResult&)> on_checkpoint;
  /// Called per finished episode with the new log entry.
  std::function<void(const TrainLogEntry&)> on_episode;
};

/// Runs the exploration + replay + SGD loop for cfg.total_steps
/// environment steps. Fully deterministic for a given (env behavior,
/// spec, cfg, seed). An initial state (e.g. from a loaded checkpoint) may
/// be supplied to resume; the replay buffer restarts empty and a fresh
/// episode begins, with epsilon continuing from the stored step count.
TrainResult train(RlEnv& env, const NetworkSpec& spec, const TrainConfig& cfg,
                  std::uint64_t seed, const TrainHooks& hooks = {},
                  const TrainResult* resume_from = nullptr);

/// Versioned binary checkpoint: spec, both parameter sets, and counters,
/// protected by a content checksum. Loads reject shape or checksum
/// mismatches.
void save_checkpoint(const std::string& path, const TrainResult& state);
TrainResult load_checkpoint(const std::string& path);

/// Format a training log entry as its line-delimited text record.
std::string format_log_entry(const TrainLogEntry& e);

}  // namespace avs
