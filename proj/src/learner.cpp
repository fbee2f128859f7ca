#include "avstress/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "avstress/errors.hpp"
#include "avstress/hash.hpp"

namespace avs {

namespace {

// Substream tags for deriving independent RNG streams from the master
// seed. Large constants so they never collide with episode indices.
constexpr std::uint64_t kInitStream = 0x696e69747374726dULL;
constexpr std::uint64_t kPolicyStream = 0x706f6c6963797374ULL;

constexpr char kCheckpointMagic[8] = {'A', 'V', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr std::size_t kCrashWindow = 100;  // episodes in the rolling rate

void append_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void append_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  append_u64(buf, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::size_t pos) : data_(data), pos_(pos) {}

  std::uint64_t u64() {
    if (pos_ + 8 > data_.size()) {
      throw std::runtime_error("checkpoint: truncated payload");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_;
};

}  // namespace

double TrainConfig::eps_at(std::size_t env_step) const {
  const std::size_t anneal = resolved_anneal_steps();
  const double frac =
      std::min(1.0, static_cast<double>(env_step) / static_cast<double>(anneal));
  return eps_initial + (eps_final - eps_initial) * frac;
}

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("train: batch must be >= 1");
  if (capacity == 0) throw ConfigError("train: capacity must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("train: gamma must be in (0, 1]");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("train: bad learning rate");
  }
  if (eps_initial < 0.0 || eps_initial > 1.0 || eps_final < 0.0 ||
      eps_final > 1.0) {
    throw ConfigError("train: epsilon values must be in [0, 1]");
  }
  if (total_steps == 0) throw ConfigError("train: total_steps must be >= 1");
  if (target_update == 0) {
    throw ConfigError("train: target_update must be >= 1");
  }
}

double td_update(Network& online, const Network& target,
                 std::span<const Transition* const> batch, double gamma,
                 double lr) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");

  Network grad(online.spec());
  ForwardTrace trace;
  std::vector<double> dq(static_cast<std::size_t>(online.spec().action_count));
  double loss = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (const Transition* t : batch) {
    const std::vector<double> q = online.forward(t->s, trace);
    double y = t->r;
    if (!t->done) {
      const std::vector<double> qt = target.forward(t->s_next);
      y += gamma * qt[static_cast<std::size_t>(masked_argmax(qt, t->mask_next))];
    }
    const double err = q[static_cast<std::size_t>(t->u)] - y;
    loss += err * err;
    std::fill(dq.begin(), dq.end(), 0.0);
    dq[static_cast<std::size_t>(t->u)] = 2.0 * err * inv_batch;
    online.backward(trace, dq, grad);
  }
  loss *= inv_batch;
  if (!std::isfinite(loss)) {
    throw std::runtime_error(
        "td_update: non-finite loss (diverged parameters or rewards)");
  }
  online.add_scaled(grad, -lr);
  return loss;
}

TrainResult train(RlEnv& env, const NetworkSpec& spec, const TrainConfig& cfg,
                  std::uint64_t seed, const TrainHooks& hooks,
                  const TrainResult* resume_from) {
  spec.validate();
  cfg.validate();
  if (spec.input_size != env.observation_size() ||
      spec.action_count != env.action_count()) {
    throw std::invalid_argument("train: network shape does not fit the env");
  }

  TrainResult st;
  st.config = cfg;
  if (resume_from != nullptr) {
    if (!(resume_from->online.spec() == spec)) {
      throw std::invalid_argument("train: resume checkpoint shape mismatch");
    }
    st.online = resume_from->online;
    st.target = resume_from->target;
    st.env_steps = resume_from->env_steps;
    st.updates = resume_from->updates;
    st.episodes = resume_from->episodes;
  } else {
    Rng init_rng(Rng::derive(seed, kInitStream));
    st.online = Network::initialized(spec, init_rng);
    st.target = st.online;
  }

  Rng policy_rng(Rng::derive(seed, kPolicyStream));
  ReplayBuffer buffer(cfg.capacity);
  std::vector<const Transition*> batch;
  std::deque<bool> crash_window;

  const std::size_t start_steps = st.env_steps;
  const std::size_t end_steps = start_steps + cfg.total_steps;

  std::vector<double> obs;
  double episode_return = 0.0;
  double last_loss = 0.0;
  bool need_reset = true;

  while (st.env_steps < end_steps) {
    if (need_reset) {
      obs = env.reset(Rng::derive(seed, st.episodes));
      episode_return = 0.0;
      need_reset = false;
    }

    const double eps = cfg.eps_at(st.env_steps);
    const std::uint64_t mask = env.action_mask();
    const int action = select_action(st.online, obs, eps, mask, policy_rng);
    StepOutcome oc = env.step(action);

    Transition t;
    t.s = std::move(obs);
    t.u = action;
    t.r = oc.reward;
    t.s_next = oc.observation;
    t.done = oc.done;
    t.mask_next = env.action_mask();
    buffer.push(std::move(t));

    obs = std::move(oc.observation);
    episode_return += oc.reward;
    ++st.env_steps;

    if (buffer.size() >= cfg.replay_start) {
      buffer.sample(static_cast<std::size_t>(cfg.batch), policy_rng, batch);
      last_loss = td_update(st.online, st.target, batch, cfg.gamma, cfg.lr);
      ++st.updates;
      if (st.updates % cfg.target_update == 0) st.target = st.online;
    }

    if (oc.done) {
      crash_window.push_back(episode_return > 0.5);
      if (crash_window.size() > kCrashWindow) crash_window.pop_front();
      std::size_t crashes = 0;
      for (bool c : crash_window) crashes += c ? 1 : 0;

      TrainLogEntry entry;
      entry.step = st.env_steps;
      entry.episode = st.episodes;
      entry.episode_return = episode_return;
      entry.rolling_crash_rate =
          static_cast<double>(crashes) / static_cast<double>(crash_window.size());
      entry.eps = eps;
      entry.loss = last_loss;
      st.log.push_back(entry);
      if (hooks.on_episode) hooks.on_episode(entry);

      ++st.episodes;
      need_reset = true;
    }

    if (cfg.checkpoint_every > 0 &&
        (st.env_steps - start_steps) % cfg.checkpoint_every == 0 &&
        st.env_steps < end_steps && hooks.on_checkpoint) {
      hooks.on_checkpoint(st);
    }
  }

  if (hooks.on_checkpoint) hooks.on_checkpoint(st);
  return st;
}

void save_checkpoint(const std::string& path, const TrainResult& state) {
  std::string payload;
  const NetworkSpec& spec = state.online.spec();
  append_u64(payload, static_cast<std::uint64_t>(spec.input_size));
  append_u64(payload, static_cast<std::uint64_t>(spec.action_count));
  append_u64(payload, static_cast<std::uint64_t>(spec.trunk_depth));
  append_u64(payload, static_cast<std::uint64_t>(spec.trunk_width));
  append_u64(payload, static_cast<std::uint64_t>(spec.stream_width));
  append_u64(payload, static_cast<std::uint64_t>(spec.input_scale.size()));
  for (double v : spec.input_scale) append_f64(payload, v);

  const TrainConfig& cfg = state.config;
  append_u64(payload, static_cast<std::uint64_t>(cfg.batch));
  append_u64(payload, static_cast<std::uint64_t>(cfg.capacity));
  append_f64(payload, cfg.gamma);
  append_f64(payload, cfg.lr);
  append_f64(payload, cfg.eps_initial);
  append_f64(payload, cfg.eps_final);
  append_u64(payload, static_cast<std::uint64_t>(cfg.replay_start));
  append_u64(payload, static_cast<std::uint64_t>(cfg.target_update));
  append_u64(payload, static_cast<std::uint64_t>(cfg.total_steps));
  append_u64(payload, static_cast<std::uint64_t>(cfg.eps_anneal_steps));
  append_u64(payload, static_cast<std::uint64_t>(cfg.checkpoint_every));

  append_u64(payload, static_cast<std::uint64_t>(state.env_steps));
  append_u64(payload, static_cast<std::uint64_t>(state.updates));
  append_u64(payload, static_cast<std::uint64_t>(state.episodes));

  const std::vector<double> online = state.online.flatten();
  const std::vector<double> target = state.target.flatten();
  append_u64(payload, static_cast<std::uint64_t>(online.size()));
  for (double v : online) append_f64(payload, v);
  for (double v : target) append_f64(payload, v);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  std::string sum;
  append_u64(sum, fnv1a(payload));
  out.write(sum.data(), static_cast<std::streamsize>(sum.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

TrainResult load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingInputError("no such checkpoint: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() < sizeof kCheckpointMagic + 8 ||
      std::memcmp(data.data(), kCheckpointMagic, sizeof kCheckpointMagic) !=
          0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }

  ByteReader sum_reader(data, sizeof kCheckpointMagic);
  const std::uint64_t stored_sum = sum_reader.u64();
  const std::string_view payload(data.data() + sizeof kCheckpointMagic + 8,
                                 data.size() - sizeof kCheckpointMagic - 8);
  if (fnv1a(payload) != stored_sum) {
    throw std::runtime_error("checkpoint checksum mismatch: " + path);
  }

  ByteReader r(data, sizeof kCheckpointMagic + 8);
  NetworkSpec spec;
  spec.input_size = static_cast<int>(r.u64());
  spec.action_count = static_cast<int>(r.u64());
  spec.trunk_depth = static_cast<int>(r.u64());
  spec.trunk_width = static_cast<int>(r.u64());
  spec.stream_width = static_cast<int>(r.u64());
  const std::uint64_t scale_n = r.u64();
  spec.input_scale.resize(scale_n);
  for (std::uint64_t i = 0; i < scale_n; ++i) spec.input_scale[i] = r.f64();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint shape error: ") +
                             e.what());
  }

  TrainResult st;
  st.config.batch = static_cast<int>(r.u64());
  st.config.capacity = static_cast<std::size_t>(r.u64());
  st.config.gamma = r.f64();
  st.config.lr = r.f64();
  st.config.eps_initial = r.f64();
  st.config.eps_final = r.f64();
  st.config.replay_start = static_cast<std::size_t>(r.u64());
  st.config.target_update = static_cast<std::size_t>(r.u64());
  st.config.total_steps = static_cast<std::size_t>(r.u64());
  st.config.eps_anneal_steps = static_cast<std::size_t>(r.u64());
  st.config.checkpoint_every = static_cast<std::size_t>(r.u64());

  st.env_steps = static_cast<std::size_t>(r.u64());
  st.updates = static_cast<std::size_t>(r.u64());
  st.episodes = static_cast<std::size_t>(r.u64());

  Network net(spec);
  const std::uint64_t n = r.u64();
  if (n != net.param_count()) {
    throw std::runtime_error("checkpoint shape error: parameter count");
  }
  std::vector<double> flat(n);
  for (std::uint64_t i = 0; i < n; ++i) flat[i] = r.f64();
  st.online = net;
  st.online.load_flat(flat);
  for (std::uint64_t i = 0; i < n; ++i) flat[i] = r.f64();
  st.target = net;
  st.target.load_flat(flat);
  if (!r.exhausted()) {
    throw std::runtime_error("checkpoint has trailing bytes: " + path);
  }
  return st;
}

std::string format_log_entry(const TrainLogEntry& e) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g",
                e.step, e.episode, e.episode_return, e.rolling_crash_rate,
                e.eps, e.loss);
  return buf;
}

}  // namespace avs
