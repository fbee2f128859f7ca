#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "avstress/rng.hpp"

namespace avs {

/// One stored environment interaction.
struct Transition {
  std::vector<double> s;
  int u = 0;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
  std::uint64_t mask_next = 0;  // legal actions in s_next (bit per action)
};

/// Fixed-capacity FIFO experience store with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
      throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);  // overwrite the oldest entry
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// Entry by age: index 0 is the oldest retained transition.
  const Transition& oldest_first(std::size_t i) const {
    if (i >= data_.size()) {
      throw std::out_of_range("ReplayBuffer: index out of range");
    }
    return data_[(head_ + i) % data_.size()];
  }

  /// Uniform sample with replacement; `out` is overwritten and holds
  /// pointers valid until the next push.
  void sample(std::size_t batch, Rng& rng,
              std::vector<const Transition*>& out) const {
    if (data_.empty()) {
      throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
    }
    out.clear();
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      out.push_back(&data_[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(data_.size())))]);
    }
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next eviction slot once the buffer is full
  std::vector<Transition> data_;
};

}  // namespace avs
