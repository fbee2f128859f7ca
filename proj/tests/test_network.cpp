#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "avstress/network.hpp"
#include "avstress/rng.hpp"
#include "doctest.h"

using namespace avs;

namespace {

NetworkSpec tiny_spec() {
  NetworkSpec spec;
  spec.input_size = 3;
  spec.action_count = 4;
  spec.trunk_depth = 2;
  spec.trunk_width = 8;
  spec.stream_width = 6;
  return spec;
}

std::vector<double> random_obs(int n, Rng& rng) {
  std::vector<double> obs(n);
  for (double& x : obs) x = rng.uniform(-1.0, 1.0);
  return obs;
}

}  // namespace

TEST_CASE("spec validation") {
  NetworkSpec spec;
  CHECK_NOTHROW(spec.validate());
  NetworkSpec bad = spec;
  bad.input_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.trunk_depth = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.input_scale = {1.0, 2.0};  // wrong length
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("parameter count matches the layer shapes") {
  NetworkSpec spec;  // default 34 -> 4x128 -> two 128 streams -> 33
  Rng rng(1);
  Network net = Network::initialized(spec, rng);
  const std::size_t trunk0 = 34 * 128 + 128;
  const std::size_t trunk_rest = 3 * (128 * 128 + 128);
  const std::size_t value = (128 * 128 + 128) + (128 + 1);
  const std::size_t adv = (128 * 128 + 128) + (128 * 33 + 33);
  CHECK(net.param_count() == trunk0 + trunk_rest + value + adv);
  CHECK(net.param_count() == 91426);
  CHECK(net.flatten().size() == net.param_count());
  // Canonical layer order: trunk, value hidden/out, advantage hidden/out.
  const auto layers = net.layers();
  REQUIRE(layers.size() == 8);
  CHECK(layers[0]->in == 34);
  CHECK(layers[4]->in == 128);
  CHECK(layers[5]->out == 1);
  CHECK(layers[7]->out == 33);
}

TEST_CASE("initialization is seed-deterministic with zero biases") {
  NetworkSpec spec = tiny_spec();
  Rng r1(77), r2(77), r3(78);
  Network a = Network::initialized(spec, r1);
  Network b = Network::initialized(spec, r2);
  Network c = Network::initialized(spec, r3);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  for (const Layer* layer : a.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer->in));
    for (double w : layer->w) CHECK(std::abs(w) <= bound);
    for (double bias : layer->b) CHECK(bias == 0.0);
    // Not all zero: the draw actually happened.
    CHECK(std::any_of(layer->w.begin(), layer->w.end(),
                      [](double w) { return w != 0.0; }));
  }
}

TEST_CASE("a zero network outputs zero everywhere") {
  Network net((tiny_spec()));
  Rng rng(5);
  const std::vector<double> q = net.forward(random_obs(3, rng));
  REQUIRE(q.size() == 4);
  for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("outputs combine value and mean-centered advantages") {
  NetworkSpec spec = tiny_spec();
  Rng rng(123);
  Network net = Network::initialized(spec, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<double> obs = random_obs(spec.input_size, rng);
    ForwardTrace trace;
    const std::vector<double> q = net.forward(obs, trace);
    REQUIRE(static_cast<int>(q.size()) == spec.action_count);
    const double mean_adv =
        std::accumulate(trace.advantage.begin(), trace.advantage.end(), 0.0) /
        spec.action_count;
    for (int a = 0; a < spec.action_count; ++a) {
      CHECK(q[a] ==
            doctest::Approx(trace.value + trace.advantage[a] - mean_adv)
                .epsilon(1e-12));
    }
    // Mean output equals the state value, to rounding.
    const double mean_q =
        std::accumulate(q.begin(), q.end(), 0.0) / spec.action_count;
    CHECK(std::abs(mean_q - trace.value) < 1e-9);
  }
}

TEST_CASE("shifting the value head moves all outputs together") {
  NetworkSpec spec = tiny_spec();
  Rng rng(321);
  Network net = Network::initialized(spec, rng);
  const std::vector<double> obs = random_obs(spec.input_size, rng);
  const std::vector<double> before = net.forward(obs);

  const double delta = 0.625;
  net.layers()[5]->b[0] += delta;  // value output bias
  const std::vector<double> shifted = net.forward(obs);
  for (std::size_t a = 0; a < before.size(); ++a) {
    CHECK(shifted[a] == doctest::Approx(before[a] + delta).epsilon(1e-12));
  }

  // A constant added to every advantage output bias cancels in the mean
  // subtraction and leaves the outputs untouched.
  net.layers()[5]->b[0] -= delta;
  for (double& bias : net.layers()[7]->b) bias += 3.25;
  const std::vector<double> unchanged = net.forward(obs);
  for (std::size_t a = 0; a < before.size(); ++a) {
    CHECK(unchanged[a] == doctest::Approx(before[a]).epsilon(1e-12));
  }
}

TEST_CASE("input scaling folds into the forward pass") {
  NetworkSpec scaled = tiny_spec();
  scaled.input_scale = {0.5, 2.0, 0.25};
  Rng rng(9);
  Network a = Network::initialized(scaled, rng);

  NetworkSpec plain = tiny_spec();
  Network b{plain};
  b.load_flat(a.flatten());

  Rng obs_rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> obs = random_obs(3, obs_rng);
    const std::vector<double> pre = {obs[0] * 0.5, obs[1] * 2.0,
                                     obs[2] * 0.25};
    ForwardTrace trace;
    const std::vector<double> qa = a.forward(obs, trace);
    const std::vector<double> qb = b.forward(pre);
    CHECK(trace.input == pre);
    for (std::size_t i = 0; i < qa.size(); ++i) {
      CHECK(qa[i] == doctest::Approx(qb[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("trace keeps rectified trunk activations") {
  NetworkSpec spec = tiny_spec();
  Rng rng(42);
  Network net = Network::initialized(spec, rng);
  ForwardTrace trace;
  net.forward(random_obs(3, rng), trace);
  REQUIRE(trace.trunk_pre.size() == trace.trunk_post.size());
  bool saw_negative_pre = false;
  for (std::size_t l = 0; l < trace.trunk_pre.size(); ++l) {
    for (std::size_t i = 0; i < trace.trunk_pre[l].size(); ++i) {
      CHECK(trace.trunk_post[l][i] == std::max(0.0, trace.trunk_pre[l][i]));
      saw_negative_pre |= trace.trunk_pre[l][i] < 0.0;
    }
  }
  CHECK(saw_negative_pre);  // otherwise the ReLU check is vacuous
}

TEST_CASE("backward matches central-difference gradients") {
  NetworkSpec spec = tiny_spec();
  spec.input_scale = {1.0, 0.5, 2.0};  // scaling must be differentiated too
  Rng rng(2024);
  Network net = Network::initialized(spec, rng);
  const std::vector<double> obs = random_obs(spec.input_size, rng);
  std::vector<double> dq(spec.action_count);
  for (double& g : dq) g = rng.uniform(-1.0, 1.0);

  ForwardTrace trace;
  net.forward(obs, trace);
  Network grad{spec};
  net.backward(trace, dq, grad);
  const std::vector<double> analytic = grad.flatten();

  std::vector<double> params = net.flatten();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    net.load_flat(params);
    const std::vector<double> qp = net.forward(obs);
    params[i] = keep - h;
    net.load_flat(params);
    const std::vector<double> qm = net.forward(obs);
    params[i] = keep;
    double lp = 0.0, lm = 0.0;
    for (int a = 0; a < spec.action_count; ++a) {
      lp += dq[a] * qp[a];
      lm += dq[a] * qm[a];
    }
    const double numeric = (lp - lm) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(numeric),
                                   std::abs(analytic[i])});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  net.load_flat(params);
  CHECK(worst < 1e-7);
}

TEST_CASE("backward accumulates instead of overwriting") {
  NetworkSpec spec = tiny_spec();
  Rng rng(88);
  Network net = Network::initialized(spec, rng);
  const std::vector<double> obs = random_obs(3, rng);
  std::vector<double> dq(spec.action_count, 0.5);

  ForwardTrace trace;
  net.forward(obs, trace);
  Network grad{spec};
  net.backward(trace, dq, grad);
  const std::vector<double> once = grad.flatten();
  net.backward(trace, dq, grad);
  const std::vector<double> twice = grad.flatten();
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
  }
}

TEST_CASE("parameter arithmetic round-trips") {
  NetworkSpec spec = tiny_spec();
  Rng rng(3);
  Network a = Network::initialized(spec, rng);
  Network b = Network::initialized(spec, rng);
  const std::vector<double> obs = random_obs(3, rng);

  // a += -1 * a zeroes the outputs.
  Network c = a;
  c.add_scaled(a, -1.0);
  for (double q : c.forward(obs)) CHECK(q == 0.0);

  // Flatten / load_flat is lossless.
  Network d{spec};
  d.load_flat(b.flatten());
  CHECK(d.flatten() == b.flatten());
  CHECK(d.forward(obs) == b.forward(obs));

  // Size mismatches are rejected.
  std::vector<double> short_vec(b.param_count() - 1, 0.0);
  CHECK_THROWS_AS(d.load_flat(short_vec), std::invalid_argument);

  // set_zero clears in place.
  d.set_zero();
  for (double q : d.forward(obs)) CHECK(q == 0.0);

  // add_scaled composes linearly at the parameter level.
  Network e{spec};
  e.add_scaled(a, 0.25);
  e.add_scaled(b, 0.75);
  const std::vector<double> fa = a.flatten();
  const std::vector<double> fb = b.flatten();
  const std::vector<double> fe = e.flatten();
  for (std::size_t i = 0; i < fe.size(); ++i) {
    CHECK(fe[i] == doctest::Approx(0.25 * fa[i] + 0.75 * fb[i])
                       .epsilon(1e-12));
  }
}

TEST_CASE("masked argmax respects the mask and breaks ties low") {
  const std::vector<double> q = {1.0, 5.0, 5.0, -2.0};
  CHECK(masked_argmax(q, 0b1111) == 1);          // tie -> lowest index
  CHECK(masked_argmax(q, 0b1101) == 2);          // best allowed
  CHECK(masked_argmax(q, 0b1001) == 0);
  CHECK(masked_argmax(q, 0b1000) == 3);
  CHECK_THROWS_AS(masked_argmax(q, 0), std::invalid_argument);
  // Bits past the action count are ignored.
  CHECK(masked_argmax(q, ~0ULL) == 1);
}

TEST_CASE("action selection is greedy at eps 0 and uniform at eps 1") {
  NetworkSpec spec = tiny_spec();
  Rng init(6);
  Network net = Network::initialized(spec, init);
  Rng obs_rng(7);
  const std::vector<double> obs = random_obs(3, obs_rng);
  const std::uint64_t mask = 0b1011;  // action 2 is forbidden

  Rng rng(8);
  const int greedy = masked_argmax(net.forward(obs), mask);
  for (int i = 0; i < 100; ++i) {
    CHECK(select_action(net, obs, 0.0, mask, rng) == greedy);
  }

  std::array<int, 4> freq{};
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    ++freq[select_action(net, obs, 1.0, mask, rng)];
  }
  CHECK(freq[2] == 0);
  const double expect = draws / 3.0;
  const double sigma = std::sqrt(draws * (1.0 / 3.0) * (2.0 / 3.0));
  for (int a : {0, 1, 3}) {
    CHECK(std::abs(freq[a] - expect) < 3.0 * sigma);
  }
}
