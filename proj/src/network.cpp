#include "avstress/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avs {

namespace {

Layer make_layer(int in, int out) {
  Layer l;
  l.in = in;
  l.out = out;
  l.w.assign(static_cast<std::size_t>(in) * out, 0.0);
  l.b.assign(static_cast<std::size_t>(out), 0.0);
  return l;
}

void dense_forward(const Layer& l, std::span<const double> x,
                   std::vector<double>& y) {
  y.assign(static_cast<std::size_t>(l.out), 0.0);
  for (int i = 0; i < l.out; ++i) {
    double acc = l.b[static_cast<std::size_t>(i)];
    const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
    for (int j = 0; j < l.in; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void relu(const std::vector<double>& pre, std::vector<double>& post) {
  post.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  }
}

/// dLoss/dInput of a dense layer, with weight/bias gradients accumulated.
void dense_backward(const Layer& l, std::span<const double> x,
                    std::span<const double> dy, Layer& grad,
                    std::vector<double>& dx) {
  dx.assign(static_cast<std::size_t>(l.in), 0.0);
  for (int i = 0; i < l.out; ++i) {
    const double g = dy[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    grad.b[static_cast<std::size_t>(i)] += g;
    const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
    double* grow = grad.w.data() + static_cast<std::size_t>(i) * l.in;
    for (int j = 0; j < l.in; ++j) {
      grow[j] += g * x[static_cast<std::size_t>(j)];
      dx[static_cast<std::size_t>(j)] += g * row[j];
    }
  }
}

void relu_backward(const std::vector<double>& pre, std::vector<double>& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (pre[i] <= 0.0) d[i] = 0.0;
  }
}

void init_layer(Layer& l, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
  for (double& w : l.w) w = rng.uniform(-bound, bound);
  // Biases start at zero.
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_size < 1 || action_count < 1 || trunk_depth < 1 ||
      trunk_width < 1 || stream_width < 1) {
    throw std::invalid_argument("NetworkSpec: all dimensions must be >= 1");
  }
  if (!input_scale.empty() &&
      input_scale.size() != static_cast<std::size_t>(input_size)) {
    throw std::invalid_argument(
        "NetworkSpec: input_scale length must equal input_size");
  }
}

Network::Network(const NetworkSpec& spec) : spec_(spec) {
  spec_.validate();
  int in = spec_.input_size;
  for (int d = 0; d < spec_.trunk_depth; ++d) {
    trunk_.push_back(make_layer(in, spec_.trunk_width));
    in = spec_.trunk_width;
  }
  value_hidden_ = make_layer(in, spec_.stream_width);
  value_out_ = make_layer(spec_.stream_width, 1);
  adv_hidden_ = make_layer(in, spec_.stream_width);
  adv_out_ = make_layer(spec_.stream_width, spec_.action_count);
}

Network Network::initialized(const NetworkSpec& spec, Rng& rng) {
  Network net(spec);
  for (Layer* l : net.layers()) init_layer(*l, rng);
  return net;
}

std::vector<double> Network::forward(std::span<const double> obs) const {
  ForwardTrace trace;
  return forward(obs, trace);
}

std::vector<double> Network::forward(std::span<const double> obs,
                                     ForwardTrace& trace) const {
  if (obs.size() != static_cast<std::size_t>(spec_.input_size)) {
    throw std::invalid_argument("Network::forward: observation size mismatch");
  }
  trace.input.assign(obs.begin(), obs.end());
  if (!spec_.input_scale.empty()) {
    for (std::size_t i = 0; i < trace.input.size(); ++i) {
      trace.input[i] *= spec_.input_scale[i];
    }
  }

  trace.trunk_pre.resize(trunk_.size());
  trace.trunk_post.resize(trunk_.size());
  const std::vector<double>* x = &trace.input;
  for (std::size_t d = 0; d < trunk_.size(); ++d) {
    dense_forward(trunk_[d], *x, trace.trunk_pre[d]);
    relu(trace.trunk_pre[d], trace.trunk_post[d]);
    x = &trace.trunk_post[d];
  }

  dense_forward(value_hidden_, *x, trace.value_pre);
  relu(trace.value_pre, trace.value_post);
  std::vector<double> v_out;
  dense_forward(value_out_, trace.value_post, v_out);
  trace.value = v_out[0];

  dense_forward(adv_hidden_, *x, trace.adv_pre);
  relu(trace.adv_pre, trace.adv_post);
  dense_forward(adv_out_, trace.adv_post, trace.advantage);

  double mean_adv = 0.0;
  for (double a : trace.advantage) mean_adv += a;
  mean_adv /= static_cast<double>(trace.advantage.size());

  trace.q.resize(trace.advantage.size());
  for (std::size_t i = 0; i < trace.q.size(); ++i) {
    trace.q[i] = trace.value + trace.advantage[i] - mean_adv;
  }
  return trace.q;
}

void Network::backward(const ForwardTrace& trace, std::span<const double> dq,
                       Network& grad) const {
  if (dq.size() != static_cast<std::size_t>(spec_.action_count)) {
    throw std::invalid_argument("Network::backward: dq size mismatch");
  }
  if (!(grad.spec_ == spec_)) {
    throw std::invalid_argument("Network::backward: gradient shape mismatch");
  }

  // Combine: q_i = v + a_i - mean(a). dv = sum(dq); da_i = dq_i - mean(dq).
  double sum_dq = 0.0;
  for (double g : dq) sum_dq += g;
  const double mean_dq = sum_dq / static_cast<double>(dq.size());

  std::vector<double> da(dq.size());
  for (std::size_t i = 0; i < dq.size(); ++i) da[i] = dq[i] - mean_dq;
  std::vector<double> dv{sum_dq};

  const std::vector<double>& trunk_top =
      trunk_.empty() ? trace.input : trace.trunk_post.back();

  // Value stream.
  std::vector<double> d_value_post;
  dense_backward(value_out_, trace.value_post, dv, grad.value_out_,
                 d_value_post);
  relu_backward(trace.value_pre, d_value_post);
  std::vector<double> d_top_value;
  dense_backward(value_hidden_, trunk_top, d_value_post, grad.value_hidden_,
                 d_top_value);

  // Advantage stream.
  std::vector<double> d_adv_post;
  dense_backward(adv_out_, trace.adv_post, da, grad.adv_out_, d_adv_post);
  relu_backward(trace.adv_pre, d_adv_post);
  std::vector<double> d_top_adv;
  dense_backward(adv_hidden_, trunk_top, d_adv_post, grad.adv_hidden_,
                 d_top_adv);

  std::vector<double> d = d_top_value;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += d_top_adv[i];

  // Trunk, top to bottom.
  for (std::size_t d_idx = trunk_.size(); d_idx-- > 0;) {
    relu_backward(trace.trunk_pre[d_idx], d);
    const std::vector<double>& x =
        d_idx == 0 ? trace.input : trace.trunk_post[d_idx - 1];
    std::vector<double> dx;
    dense_backward(trunk_[d_idx], x, d, grad.trunk_[d_idx], dx);
    d = std::move(dx);
  }
}

void Network::add_scaled(const Network& other, double alpha) {
  if (!(other.spec_ == spec_)) {
    throw std::invalid_argument("Network::add_scaled: shape mismatch");
  }
  auto mine = layers();
  auto theirs = other.layers();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    for (std::size_t j = 0; j < mine[i]->w.size(); ++j) {
      mine[i]->w[j] += alpha * theirs[i]->w[j];
    }
    for (std::size_t j = 0; j < mine[i]->b.size(); ++j) {
      mine[i]->b[j] += alpha * theirs[i]->b[j];
    }
  }
}

void Network::set_zero() {
  for (Layer* l : layers()) {
    std::fill(l->w.begin(), l->w.end(), 0.0);
    std::fill(l->b.begin(), l->b.end(), 0.0);
  }
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const Layer* l : layers()) n += l->w.size() + l->b.size();
  return n;
}

std::vector<double> Network::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const Layer* l : layers()) {
    out.insert(out.end(), l->w.begin(), l->w.end());
    out.insert(out.end(), l->b.begin(), l->b.end());
  }
  return out;
}

void Network::load_flat(std::span<const double> flat) {
  if (flat.size() != param_count()) {
    throw std::invalid_argument("Network::load_flat: size mismatch");
  }
  std::size_t pos = 0;
  for (Layer* l : layers()) {
    std::copy_n(flat.begin() + pos, l->w.size(), l->w.begin());
    pos += l->w.size();
    std::copy_n(flat.begin() + pos, l->b.size(), l->b.begin());
    pos += l->b.size();
  }
}

std::vector<Layer*> Network::layers() {
  std::vector<Layer*> out;
  for (Layer& l : trunk_) out.push_back(&l);
  out.push_back(&value_hidden_);
  out.push_back(&value_out_);
  out.push_back(&adv_hidden_);
  out.push_back(&adv_out_);
  return out;
}

std::vector<const Layer*> Network::layers() const {
  std::vector<const Layer*> out;
  for (const Layer& l : trunk_) out.push_back(&l);
  out.push_back(&value_hidden_);
  out.push_back(&value_out_);
  out.push_back(&adv_hidden_);
  out.push_back(&adv_out_);
  return out;
}

int masked_argmax(std::span<const double> q, std::uint64_t mask) {
  int best = -1;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!((mask >> i) & 1ULL)) continue;
    if (best < 0 || q[i] > q[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw std::invalid_argument("masked_argmax: empty mask");
  return best;
}

int select_action(const Network& net, std::span<const double> obs, double eps,
                  std::uint64_t mask, Rng& rng) {
  std::vector<int> allowed;
  for (int i = 0; i < net.spec().action_count; ++i) {
    if ((mask >> i) & 1ULL) allowed.push_back(i);
  }
  if (allowed.empty()) {
    throw std::invalid_argument("select_action: empty mask");
  }
  if (rng.uniform() < eps) {
    return allowed[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(allowed.size())))];
  }
  const std::vector<double> q = net.forward(obs);
  return masked_argmax(q, mask);
}

}  // namespace avs
