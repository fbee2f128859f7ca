#include "avstress/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "avstress/traffic.hpp"

namespace avs {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMetersPerMile = 1609.344;
// Substream tag for the baseline actor's own draws (distinct from the
// environment stream so logged episodes replay without it).
constexpr std::uint64_t kActorStream = 0x6163746f72737472ULL;

struct EpisodeResult {
  Scenario scenario;
  bool crashed = false;
  bool cav_crash = false;
  CornerCaseRecord record;  // valid when crashed
  double cav_distance = 0.0;
  std::uint64_t steps = 0;
  MetricHistogram front_bbd = make_bbd_histogram();
  MetricHistogram front_ttc = make_ttc_histogram();
  MetricHistogram rear_bbd = make_bbd_histogram();
  MetricHistogram rear_ttc = make_ttc_histogram();
};

void accumulate_scene_metrics(const Scene& scene, MetricHistogram& front_bbd,
                              MetricHistogram& front_ttc,
                              MetricHistogram& rear_bbd,
                              MetricHistogram& rear_ttc) {
  const NeighborSet nb = neighbors(scene, scene.cav_id);
  const VehicleState& cav = scene.cav();
  const auto& front = nb.slots[NeighborSet::kEgoLeader];
  if (front.has_value()) {
    front_bbd.add(bbd(cav, *front));
    if (const auto t = ttc(cav, *front)) front_ttc.add(*t);
  }
  const auto& rear = nb.slots[NeighborSet::kEgoFollower];
  if (rear.has_value()) {
    rear_bbd.add(bbd(*rear, cav));
    if (const auto t = ttc(*rear, cav)) rear_ttc.add(*t);
  }
}

int pick_critical_bv(const CrashEvent& crash, const Scene& scene) {
  const int cav = scene.cav_id;
  if (crash.vehicle_a == cav) return crash.vehicle_b;
  if (crash.vehicle_b == cav) return crash.vehicle_a;
  // BV-BV ending: track the background vehicle nearest the CAV.
  const VehicleState& c = scene.cav();
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const VehicleState& v : scene.vehicles) {
    if (v.id == cav) continue;
    const double dx = v.lon - c.lon;
    const double dy = v.lat - c.lat;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d < best_dist) {
      best_dist = d;
      best = v.id;
    }
  }
  return best;
}

EpisodeResult run_one_episode(const EnvConfig& env_cfg, const NddTable& table,
                              const Network* policy, const std::string& mode,
                              std::uint64_t episode_seed,
                              const CrashTypeParams& ctp) {
  HighwayEnv env(env_cfg, &table);
  std::vector<double> obs = env.reset(episode_seed);
  Rng actor(Rng::derive(episode_seed, kActorStream));

  EpisodeResult out;
  Scenario& sc = out.scenario;
  sc.seed = episode_seed;
  sc.mode = mode;
  sc.ndd_checksum = table.checksum();
  sc.env = env_cfg;
  sc.scenes.push_back(env.scene());

  const double cav_start = env.scene().cav().lon;
  accumulate_scene_metrics(env.scene(), out.front_bbd, out.front_ttc,
                           out.rear_bbd, out.rear_ttc);

  while (!env.done()) {
    const std::uint64_t mask = env.action_mask();
    int action;
    if (policy != nullptr) {
      action = masked_argmax(policy->forward(obs), mask);
    } else {
      // Baseline: the controlled slot behaves like any other vehicle and
      // samples the empirical table for its own binned state.
      const Scene& cur = env.scene();
      const VehicleState& bv = cur.by_id(env.controlled_id());
      const NeighborSet nb = neighbors(cur, bv.id);
      const auto& leader = nb.slots[NeighborSet::kEgoLeader];
      const double range = leader.has_value()
                               ? bbd(bv, *leader)
                               : std::numeric_limits<double>::infinity();
      const double rate = leader.has_value() ? leader->speed - bv.speed : 0.0;
      action = table.sample(bv.speed, range, rate, actor);
    }

    ActionRecord rec;
    rec.time = env.scene().time;
    rec.controlled_id = env.controlled_id();
    rec.action = action;
    rec.mask = mask;
    sc.actions.push_back(rec);

    const StepOutcome oc = env.step(action);
    obs = oc.observation;
    sc.scenes.push_back(env.scene());
    accumulate_scene_metrics(env.scene(), out.front_bbd, out.front_ttc,
                             out.rear_bbd, out.rear_ttc);
    ++out.steps;
  }

  out.cav_distance = env.scene().cav().lon - cav_start;
  if (env.crash().has_value()) {
    sc.crash = env.crash();
    out.crashed = true;
    const CrashEvent& ev = *sc.crash;
    out.cav_crash =
        ev.vehicle_a == env.scene().cav_id || ev.vehicle_b == env.scene().cav_id;
    CornerCaseRecord record;
    record.crash = ev;
    record.critical_bv = pick_critical_bv(ev, env.scene());
    record.crash_type = classify_crash_type(ev, env.scene(), ctp);
    record.scenario = sc;
    out.record = std::move(record);
  }
  return out;
}

}  // namespace

int classify_crash_type(const CrashEvent& crash, const Scene& scene_at_crash,
                        const CrashTypeParams& p) {
  const double dh = std::abs(crash.relative_heading);
  if (dh > kPi / 2.0) return 3;

  const VehicleState& a = scene_at_crash.by_id(crash.vehicle_a);
  const VehicleState& b = scene_at_crash.by_id(crash.vehicle_b);
  // Contact-face attribution: compare penetration depth normalized by the
  // combined half-extents along each axis.
  const double norm_lon =
      std::abs(crash.contact_lon) / (0.5 * (a.length + b.length));
  const double norm_lat =
      std::abs(crash.contact_lat) / (0.5 * (a.width + b.width));
  const bool longitudinal = norm_lon >= norm_lat;

  if (!longitudinal && dh < p.side_heading) return 4;
  if (longitudinal && dh < p.rear_heading) {
    return crash.contact_lon < 0.0 ? 1 : 2;
  }
  return 5;
}

void MetricHistogram::add(double v) {
  const double step = (hi - lo) / bins;
  int idx = static_cast<int>(std::floor((v - lo) / step));
  idx = std::clamp(idx, 0, bins - 1);  // tails clamp into edge bins
  ++counts[static_cast<std::size_t>(idx)];
  ++samples;
  // The sum clamps like the bins do, so the mean is the mean of the
  // capped metric; otherwise a single near-zero closing speed would let
  // one quasi-infinite time-to-collision dominate the whole average.
  sum += std::clamp(v, lo, hi);
}

void MetricHistogram::merge(const MetricHistogram& other) {
  if (other.bins != bins || other.lo != lo || other.hi != hi) {
    throw std::invalid_argument("MetricHistogram::merge: shape mismatch");
  }
  for (int i = 0; i < bins; ++i) counts[static_cast<std::size_t>(i)] += other.counts[static_cast<std::size_t>(i)];
  samples += other.samples;
  sum += other.sum;
}

MetricHistogram make_bbd_histogram() { return MetricHistogram(0.0, 120.0, 24); }
MetricHistogram make_ttc_histogram() { return MetricHistogram(0.0, 30.0, 30); }

void safety_metrics(const std::vector<Scenario>& logs,
                    MetricHistogram& front_bbd, MetricHistogram& front_ttc,
                    MetricHistogram& rear_bbd, MetricHistogram& rear_ttc) {
  for (const Scenario& sc : logs) {
    for (const Scene& scene : sc.scenes) {
      accumulate_scene_metrics(scene, front_bbd, front_ttc, rear_bbd,
                               rear_ttc);
    }
  }
}

RunOutputs run_episodes(const EnvConfig& env_cfg, const NddTable& table,
                        const Network* policy, int episodes,
                        std::uint64_t seed, int workers, bool keep_all,
                        const CrashTypeParams& ctp) {
  if (episodes < 1) {
    throw std::invalid_argument("run_episodes: episodes must be >= 1");
  }
  env_cfg.validate();
  if (policy != nullptr &&
      (policy->spec().input_size != kObservationSize ||
       policy->spec().action_count != kActionCount)) {
    throw std::invalid_argument(
        "run_episodes: policy shape does not fit the environment");
  }
  workers = std::max(1, workers);

  const std::string mode =
      policy == nullptr ? "nde" : env_mode_name(env_cfg.mode);
  // The baseline draws from the table; its mask records reflect support.
  EnvConfig cfg = env_cfg;
  if (policy == nullptr) cfg.mode = EnvMode::kNddBounded;

  std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));
  auto worker_fn = [&](int w) {
    for (int i = w; i < episodes; i += workers) {
      results[static_cast<std::size_t>(i)] = run_one_episode(
          cfg, table, policy, mode,
          Rng::derive(seed, static_cast<std::uint64_t>(i)), ctp);
    }
  };
  if (workers == 1) {
    worker_fn(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn, w);
    for (std::thread& t : pool) t.join();
  }

  // Merge strictly in episode order so floating-point accumulation never
  // depends on the worker count.
  RunOutputs out;
  out.summary.mode = mode;
  out.summary.episodes = static_cast<std::uint64_t>(episodes);
  for (EpisodeResult& r : results) {
    out.summary.decision_steps += r.steps;
    out.summary.distance_miles += r.cav_distance / kMetersPerMile;
    out.summary.front_bbd.merge(r.front_bbd);
    out.summary.front_ttc.merge(r.front_ttc);
    out.summary.rear_bbd.merge(r.rear_bbd);
    out.summary.rear_ttc.merge(r.rear_ttc);
    if (r.crashed) {
      if (r.cav_crash) {
        ++out.summary.cav_crashes;
        ++out.summary.crash_types[static_cast<std::size_t>(
            r.record.crash_type)];
      } else {
        ++out.summary.bv_crashes;
      }
      out.corner_cases.push_back(std::move(r.record));
    }
    if (keep_all) out.scenarios.push_back(std::move(r.scenario));
  }
  out.summary.crash_rate = static_cast<double>(out.summary.cav_crashes) /
                           static_cast<double>(out.summary.episodes);
  return out;
}

void replay_scenario(const Scenario& s, const NddTable& table) {
  if (table.checksum() != s.ndd_checksum) {
    throw std::runtime_error(
        "replay: action-table checksum differs from the logged one");
  }
  EnvConfig cfg = s.env;
  const auto mode = env_mode_from_name(s.mode);
  cfg.mode = (s.mode == "nde" || !mode.has_value()) ? EnvMode::kNddBounded
                                                    : *mode;

  HighwayEnv env(cfg, &table);
  env.reset(s.seed);

  auto scenes_equal = [](const Scene& a, const Scene& b) {
    if (a.time != b.time || a.cav_id != b.cav_id ||
        a.vehicles.size() != b.vehicles.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
      const VehicleState& x = a.vehicles[i];
      const VehicleState& y = b.vehicles[i];
      if (x.id != y.id || x.lane != y.lane || x.lon != y.lon ||
          x.lat != y.lat || x.speed != y.speed || x.heading != y.heading) {
        return false;
      }
    }
    return true;
  };

  if (s.scenes.empty()) throw std::runtime_error("replay: empty scenario");
  if (!scenes_equal(env.scene(), s.scenes.front())) {
    throw std::runtime_error("replay: initial scene mismatch");
  }
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    const ActionRecord& a = s.actions[i];
    if (env.controlled_id() != a.controlled_id) {
      throw std::runtime_error("replay: controlled id diverged at step " +
                               std::to_string(i));
    }
    env.step(a.action);
    if (!scenes_equal(env.scene(), s.scenes[i + 1])) {
      throw std::runtime_error("replay: scene mismatch after step " +
                               std::to_string(i));
    }
  }
  if (s.crash.has_value() != env.crash().has_value()) {
    throw std::runtime_error("replay: crash presence mismatch");
  }
  if (s.crash.has_value()) {
    const CrashEvent& want = *s.crash;
    const CrashEvent& got = *env.crash();
    if (want.vehicle_a != got.vehicle_a || want.vehicle_b != got.vehicle_b ||
        want.time != got.time || want.contact_lon != got.contact_lon ||
        want.contact_lat != got.contact_lat ||
        want.relative_heading != got.relative_heading) {
      throw std::runtime_error("replay: crash event mismatch");
    }
  }
}

namespace {

nlohmann::json histogram_to_json(const MetricHistogram& h) {
  nlohmann::json frac = nlohmann::json::array();
  for (std::uint64_t c : h.counts) {
    frac.push_back(h.samples == 0
                       ? 0.0
                       : static_cast<double>(c) / static_cast<double>(h.samples));
  }
  return nlohmann::json{{"lo", h.lo},
                        {"hi", h.hi},
                        {"bins", h.bins},
                        {"counts", h.counts},
                        {"fractions", frac},
                        {"samples", h.samples},
                        {"mean", h.mean()}};
}

}  // namespace

std::string summary_to_json(const RunSummary& s) {
  nlohmann::json types = nlohmann::json::array();
  for (int t = 1; t <= 5; ++t) {
    types.push_back(s.crash_types[static_cast<std::size_t>(t)]);
  }
  nlohmann::json j{{"mode", s.mode},
                   {"episodes", s.episodes},
                   {"cav_crashes", s.cav_crashes},
                   {"bv_crashes", s.bv_crashes},
                   {"crash_rate", s.crash_rate},
                   {"distance_miles", s.distance_miles},
                   {"decision_steps", s.decision_steps},
                   {"crash_types", types},
                   {"front_bbd", histogram_to_json(s.front_bbd)},
                   {"front_ttc", histogram_to_json(s.front_ttc)},
                   {"rear_bbd", histogram_to_json(s.rear_bbd)},
                   {"rear_ttc", histogram_to_json(s.rear_ttc)}};
  return j.dump(2) + "\n";
}

std::string summary_to_text(const RunSummary& s) {
  std::ostringstream out;
  out << "run summary (" << s.mode << ")\n";
  out << "  episodes:        " << s.episodes << "\n";
  out << "  cav crashes:     " << s.cav_crashes << "\n";
  out << "  bv-bv crashes:   " << s.bv_crashes << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", s.crash_rate);
  out << "  crash rate:      " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.4g", s.distance_miles);
  out << "  distance driven: " << buf << " miles\n";
  out << "  decision steps:  " << s.decision_steps << "\n";
  out << "  crash types 1-5:";
  for (int t = 1; t <= 5; ++t) {
    out << ' ' << s.crash_types[static_cast<std::size_t>(t)];
  }
  out << "\n";
  const auto metric_line = [&](const char* label, const MetricHistogram& h,
                               const char* unit) {
    std::snprintf(buf, sizeof buf, "%.6g", h.mean());
    out << label << buf << ' ' << unit << " (capped at "
        << static_cast<long long>(h.hi) << ") over " << h.samples
        << " samples\n";
  };
  metric_line("  mean front bbd:  ", s.front_bbd, "m");
  metric_line("  mean front ttc:  ", s.front_ttc, "s");
  metric_line("  mean rear bbd:   ", s.rear_bbd, "m");
  metric_line("  mean rear ttc:   ", s.rear_ttc, "s");
  return out.str();
}

}  // namespace avs
