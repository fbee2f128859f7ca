#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avstress/rng.hpp"

namespace avs {

/// Shape of the dueling Q-network: a shared fully-connected trunk
/// followed by a scalar value stream and a per-action advantage stream,
/// combined as Q = V + A - mean(A). Optional per-feature input scaling is
/// folded into the first layer's view of the observation.
struct NetworkSpec {
  int input_size = 34;
  int action_count = 33;
  int trunk_depth = 4;
  int trunk_width = 128;
  int stream_width = 128;
  std::vector<double> input_scale;  // empty = no scaling; else one per input

  void validate() const;  // throws std::invalid_argument
  bool operator==(const NetworkSpec&) const = default;
};

/// One dense layer, weights row-major [out x in].
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

/// Intermediate activations of one forward pass, retained for
/// backpropagation and for inspecting pre-activation margins.
struct ForwardTrace {
  std::vector<double> input;                    // after input scaling
  std::vector<std::vector<double>> trunk_pre;   // per trunk layer
  std::vector<std::vector<double>> trunk_post;  // rectified
  std::vector<double> value_pre, value_post;    // stream hidden
  std::vector<double> adv_pre, adv_post;
  double value = 0.0;                 // V(s)
  std::vector<double> advantage;      // A(s, .)
  std::vector<double> q;              // combined output
};

class Network {
 public:
  Network() = default;
  explicit Network(const NetworkSpec& spec);  // all parameters zero

  /// Fan-in-scaled uniform weights, zero biases; draw order is fixed so
  /// the same seed always builds the same network.
  static Network initialized(const NetworkSpec& spec, Rng& rng);

  const NetworkSpec& spec() const { return spec_; }

  /// Q-values for one observation (length = spec().action_count).
  std::vector<double> forward(std::span<const double> obs) const;
  /// Forward pass that also fills `trace` for a subsequent backward().
  std::vector<double> forward(std::span<const double> obs,
                              ForwardTrace& trace) const;

  /// Accumulates dLoss/dParams into `grad` (shape of *this) given
  /// dLoss/dQ for the traced pass. `grad` must be zero-initialized or
  /// hold gradients to accumulate onto.
  void backward(const ForwardTrace& trace, std::span<const double> dq,
                Network& grad) const;

  /// params += alpha * other.params (same spec required).
  void add_scaled(const Network& other, double alpha);
  void set_zero();

  std::size_t param_count() const;
  std::vector<double> flatten() const;
  void load_flat(std::span<const double> flat);  // throws on size mismatch

  /// Layer access in canonical order: trunk layers, value hidden, value
  /// out, advantage hidden, advantage out.
  std::vector<Layer*> layers();
  std::vector<const Layer*> layers() const;

 private:
  NetworkSpec spec_;
  std::vector<Layer> trunk_;
  Layer value_hidden_, value_out_;
  Layer adv_hidden_, adv_out_;
};

/// Greedy argmax of q over actions allowed by `mask` (bit i = action i
/// allowed); ties resolve to the lowest index. Throws on an all-false
/// mask.
int masked_argmax(std::span<const double> q, std::uint64_t mask);

/// Epsilon-greedy selection: with probability eps a uniform draw over
/// allowed actions, otherwise the masked greedy action.
int select_action(const Network& net, std::span<const double> obs,
                  double eps, std::uint64_t mask, Rng& rng);

}  // namespace avs
