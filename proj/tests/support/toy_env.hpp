#pragma once

#include <cstdint>
#include <vector>

#include "avstress/rl_env.hpp"

namespace avs::testing {

/// Five-state deterministic chain with two actions. The agent starts in
/// the middle cell; action 0 moves left, action 1 moves right. Walking
/// off the left end pays +0.9, off the right end +1.0, every interior
/// move 0. With discounting the optimal policy is position-dependent:
/// close enough to the left edge the near exit wins, otherwise the
/// richer right exit does. Exact state values are easy to enumerate,
/// which makes this a good oracle for the full training loop.
class ToyChainEnv final : public RlEnv {
 public:
  static constexpr int kStates = 5;
  static constexpr double kLeftExit = 0.9;
  static constexpr double kRightExit = 1.0;

  int observation_size() const override { return kStates; }
  int action_count() const override { return 2; }

  std::vector<double> reset(std::uint64_t) override {
    pos_ = kStates / 2;
    done_ = false;
    return encode();
  }

  StepOutcome step(int action) override {
    if (done_) throw std::logic_error("ToyChainEnv: episode over");
    StepOutcome out;
    if (action == 0) {
      if (pos_ == 0) {
        done_ = true;
        out.reward = kLeftExit;
      } else {
        --pos_;
      }
    } else {
      if (pos_ == kStates - 1) {
        done_ = true;
        out.reward = kRightExit;
      } else {
        ++pos_;
      }
    }
    out.observation = encode();
    out.done = done_;
    return out;
  }

  std::uint64_t action_mask() const override { return 0b11; }

  int position() const { return pos_; }

 private:
  std::vector<double> encode() const {
    std::vector<double> obs(kStates, 0.0);
    obs[static_cast<std::size_t>(pos_)] = 1.0;
    return obs;
  }

  int pos_ = kStates / 2;
  bool done_ = true;
};

/// Value iteration on the same chain: returns the optimal action per
/// state for discount gamma. Independent of the network code entirely.
inline std::vector<int> chain_optimal_policy(double gamma) {
  constexpr int n = ToyChainEnv::kStates;
  std::vector<double> v(n, 0.0);
  std::vector<int> policy(n, 0);
  for (int sweep = 0; sweep < 1000; ++sweep) {
    std::vector<double> next(n);
    for (int s = 0; s < n; ++s) {
      const double left =
          s == 0 ? ToyChainEnv::kLeftExit : gamma * v[static_cast<std::size_t>(s - 1)];
      const double right =
          s == n - 1 ? ToyChainEnv::kRightExit : gamma * v[static_cast<std::size_t>(s + 1)];
      next[static_cast<std::size_t>(s)] = left > right ? left : right;
      policy[static_cast<std::size_t>(s)] = left > right ? 0 : 1;
    }
    v = next;
  }
  return policy;
}

}  // namespace avs::testing
