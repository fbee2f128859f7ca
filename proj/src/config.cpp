#include "avstress/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "avstress/errors.hpp"

namespace avs {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& where, const std::string& what,
                            const std::string& value) {
  throw ConfigError(where + ": expected " + what + ", got '" + value + "'");
}

double parse_double(const std::string& v, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE)
    bad_value(where, "a number", v);
  return x;
}

long long parse_ll(const std::string& v, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE)
    bad_value(where, "an integer", v);
  return x;
}

int parse_int(const std::string& v, const std::string& where) {
  const long long x = parse_ll(v, where);
  if (x < INT_MIN || x > INT_MAX) bad_value(where, "an int", v);
  return static_cast<int>(x);
}

std::size_t parse_size(const std::string& v, const std::string& where) {
  // Accept scientific notation for large counts (e.g. replay capacity 1e6)
  // as long as the value is a non-negative integer.
  const double x = parse_double(v, where);
  if (!(x >= 0.0) || x != std::floor(x) || x > 9e18)
    bad_value(where, "a non-negative integer", v);
  return static_cast<std::size_t>(x);
}

std::uint64_t parse_u64(const std::string& v, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE || v.front() == '-')
    bad_value(where, "an unsigned integer", v);
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(where, "a boolean", v);
}

std::vector<int> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(where, "a comma-separated integer list", v);
    out.push_back(parse_int(item, where));
  }
  if (out.empty()) bad_value(where, "a comma-separated integer list", v);
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string int_list_str(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct KeyDef {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Single source of truth for every key: parser, printer, and canonical
// order of the resolved-config echo.
const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    const auto dbl = [&d](const char* sec, const char* key,
                          double RunConfig::* ptr) {
      // only used for top-level double members
      d.push_back({sec, key,
                   [ptr](RunConfig& c, const std::string& v, const std::string& w) {
                     c.*ptr = parse_double(v, w);
                   },
                   [ptr](const RunConfig& c) { return format_double(c.*ptr); }});
    };
    (void)dbl;

#define AVS_KEY(sec, key, expr, parse)                                        \
  d.push_back({sec, key,                                                      \
               [](RunConfig& c, const std::string& v, const std::string& w) { \
                 (void)w;                                                     \
                 expr = parse;                                                \
               },                                                             \
               [](const RunConfig& c) -> std::string

#define AVS_DBL(sec, key, expr) \
  AVS_KEY(sec, key, expr, parse_double(v, w)) { return format_double(expr); }})
#define AVS_INT(sec, key, expr) \
  AVS_KEY(sec, key, expr, parse_int(v, w)) { return std::to_string(expr); }})
#define AVS_SIZE(sec, key, expr) \
  AVS_KEY(sec, key, expr, parse_size(v, w)) { return std::to_string(expr); }})
#define AVS_U64(sec, key, expr) \
  AVS_KEY(sec, key, expr, parse_u64(v, w)) { return std::to_string(expr); }})
#define AVS_BOOL(sec, key, expr) \
  AVS_KEY(sec, key, expr, parse_bool(v, w)) { return bool_str(expr); }})
#define AVS_STR(sec, key, expr) \
  AVS_KEY(sec, key, expr, v) { return expr; }})

    AVS_U64("run", "seed", c.seed);
    AVS_INT("run", "workers", c.workers);
    AVS_STR("run", "out_root", c.out_root);

    AVS_INT("road", "lanes", c.env.road.lane_count);
    AVS_DBL("road", "lane_width", c.env.road.lane_width);
    AVS_DBL("road", "length", c.env.road.length);

    AVS_INT("env", "bv_count", c.env.bv_count);
    AVS_DBL("env", "spawn_speed_lo", c.env.spawn_speed_lo);
    AVS_DBL("env", "spawn_speed_hi", c.env.spawn_speed_hi);
    AVS_INT("env", "horizon", c.env.horizon);
    AVS_DBL("env", "dt", c.env.dt);
    AVS_DBL("env", "sub_dt", c.env.sub_dt);
    AVS_DBL("env", "maneuver_duration", c.env.maneuver_duration);
    AVS_DBL("env", "spawn_headway", c.env.spawn_headway);
    AVS_DBL("env", "despawn_range", c.env.despawn_range);
    d.push_back({"env", "mode",
                 [](RunConfig& c, const std::string& v, const std::string& w) {
                   const auto mode = env_mode_from_name(v);
                   if (!mode) bad_value(w, "'unbounded' or 'ndd_bounded'", v);
                   c.env.mode = *mode;
                 },
                 [](const RunConfig& c) {
                   return std::string(env_mode_name(c.env.mode));
                 }});

    AVS_DBL("cav", "desired_speed", c.env.cav_idm.v0);
    AVS_DBL("cav", "time_headway", c.env.cav_idm.T);
    AVS_DBL("cav", "max_accel", c.env.cav_idm.a_max);
    AVS_DBL("cav", "comfort_decel", c.env.cav_idm.b);
    AVS_DBL("cav", "min_gap", c.env.cav_idm.s0);
    AVS_DBL("cav", "accel_exponent", c.env.cav_idm.delta);
    AVS_DBL("cav", "politeness", c.env.cav_mobil.politeness);
    AVS_DBL("cav", "safe_decel", c.env.cav_mobil.b_safe);
    AVS_DBL("cav", "gain_threshold", c.env.cav_mobil.a_thr);
    AVS_DBL("cav", "right_bias", c.env.cav_mobil.bias);

    AVS_DBL("bins", "speed_lo", c.bins.speed_lo);
    AVS_DBL("bins", "speed_hi", c.bins.speed_hi);
    AVS_DBL("bins", "speed_step", c.bins.speed_step);
    AVS_DBL("bins", "range_lo", c.bins.range_lo);
    AVS_DBL("bins", "range_hi", c.bins.range_hi);
    AVS_DBL("bins", "range_step", c.bins.range_step);
    AVS_DBL("bins", "rate_lo", c.bins.rate_lo);
    AVS_DBL("bins", "rate_hi", c.bins.rate_hi);
    AVS_DBL("bins", "rate_step", c.bins.rate_step);

    AVS_INT("synth", "episodes", c.synth.episodes);
    AVS_INT("synth", "steps_per_episode", c.synth.steps_per_episode);
    AVS_DBL("synth", "dt", c.synth.dt);
    AVS_DBL("synth", "accel_noise_sd", c.synth.accel_noise_sd);
    AVS_DBL("synth", "lane_change_prob", c.synth.lane_change_prob);
    AVS_DBL("synth", "leaderless_fraction", c.synth.leaderless_fraction);
    AVS_DBL("synth", "approach_fraction", c.synth.approach_fraction);

    AVS_INT("network", "trunk_depth", c.trunk_depth);
    AVS_INT("network", "trunk_width", c.trunk_width);
    AVS_INT("network", "stream_width", c.stream_width);
    AVS_BOOL("network", "scale_observations", c.scale_observations);

    AVS_INT("train", "batch", c.train.batch);
    AVS_SIZE("train", "capacity", c.train.capacity);
    AVS_DBL("train", "gamma", c.train.gamma);
    AVS_DBL("train", "lr", c.train.lr);
    AVS_DBL("train", "eps_initial", c.train.eps_initial);
    AVS_DBL("train", "eps_final", c.train.eps_final);
    AVS_SIZE("train", "replay_start", c.train.replay_start);
    AVS_SIZE("train", "target_update", c.train.target_update);
    AVS_SIZE("train", "total_steps", c.train.total_steps);
    AVS_SIZE("train", "eps_anneal_steps", c.train.eps_anneal_steps);
    AVS_SIZE("train", "checkpoint_every", c.train.checkpoint_every);
    AVS_BOOL("train", "resume", c.resume);

    AVS_INT("generate", "episodes", c.episodes);
    AVS_BOOL("generate", "keep_all", c.keep_all);

    AVS_DBL("crash_types", "rear_heading", c.crash_types.rear_heading);
    AVS_DBL("crash_types", "side_heading", c.crash_types.side_heading);

    d.push_back({"analyze", "k_values",
                 [](RunConfig& c, const std::string& v, const std::string& w) {
                   c.analyze.k_values = parse_int_list(v, w);
                 },
                 [](const RunConfig& c) {
                   return int_list_str(c.analyze.k_values);
                 }});
    AVS_INT("analyze", "min_pts", c.analyze.dbscan_min_pts);
    AVS_DBL("analyze", "eps", c.analyze.dbscan_eps);
    AVS_DBL("analyze", "majority_fraction", c.analyze.majority_fraction);
    AVS_INT("analyze", "minority_k", c.analyze.minority_k);
    AVS_INT("analyze", "kmeans_restarts", c.analyze.kmeans_restarts);
    AVS_INT("analyze", "kmeans_max_iter", c.analyze.kmeans_max_iter);

    AVS_SIZE("replay", "index", c.replay_index);

    AVS_STR("paths", "trajectories", c.trajectories);
    AVS_STR("paths", "ndd", c.ndd);
    AVS_STR("paths", "checkpoint", c.checkpoint);
    AVS_STR("paths", "corner_cases", c.corner_cases);

#undef AVS_KEY
#undef AVS_DBL
#undef AVS_INT
#undef AVS_SIZE
#undef AVS_U64
#undef AVS_BOOL
#undef AVS_STR
    return d;
  }();
  return defs;
}

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const KeyDef& def : key_defs())
    if (section == def.section && key == def.key) return &def;
  return nullptr;
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value, const std::string& where) {
  const KeyDef* def = find_key(section, key);
  if (def == nullptr)
    throw ConfigError(where + ": unknown key '" + section + "." + key + "'");
  def->set(cfg, value, where + " (" + section + "." + key + ")");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

NetworkSpec RunConfig::network_spec() const {
  NetworkSpec spec;
  spec.input_size = kObservationSize;
  spec.action_count = kActionCount;
  spec.trunk_depth = trunk_depth;
  spec.trunk_width = trunk_width;
  spec.stream_width = stream_width;
  if (scale_observations) spec.input_scale = observation_scale();
  return spec;
}

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("run.workers must be >= 1");
  env.validate();
  try {
    network_spec().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  train.validate();
  if (episodes < 1) throw ConfigError("generate.episodes must be >= 1");
  analyze.validate();
  if (synth.episodes < 1 || synth.steps_per_episode < 1)
    throw ConfigError("synth: episodes and steps_per_episode must be >= 1");
  if (synth.dt <= 0.0) throw ConfigError("synth.dt must be > 0");
  if (synth.accel_noise_sd < 0.0)
    throw ConfigError("synth.accel_noise_sd must be >= 0");
  if (synth.lane_change_prob < 0.0 || synth.lane_change_prob > 1.0)
    throw ConfigError("synth.lane_change_prob must be in [0, 1]");
  if (synth.leaderless_fraction < 0.0 || synth.leaderless_fraction > 1.0)
    throw ConfigError("synth.leaderless_fraction must be in [0, 1]");
  if (synth.approach_fraction < 0.0 || synth.approach_fraction > 1.0)
    throw ConfigError("synth.approach_fraction must be in [0, 1]");
  if (bins.speed_step <= 0.0 || bins.range_step <= 0.0 || bins.rate_step <= 0.0 ||
      bins.speed_hi <= bins.speed_lo || bins.range_hi <= bins.range_lo ||
      bins.rate_hi <= bins.rate_lo)
    throw ConfigError("bins: steps must be positive and hi > lo");
  if (crash_types.rear_heading <= 0.0 ||
      crash_types.side_heading < crash_types.rear_heading)
    throw ConfigError(
        "crash_types: need 0 < rear_heading <= side_heading");
}

void apply_config_text(RunConfig& cfg, const std::string& text,
                       const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source_name + ":" + std::to_string(lineno);
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ConfigError(where + ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    if (key.empty()) throw ConfigError(where + ": empty key");
    set_key(cfg, section, key, value, where);
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const std::size_t dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  set_key(cfg, path.substr(0, dot), path.substr(dot + 1), value, "--set");
}

std::string emit_resolved(const RunConfig& cfg) {
  std::ostringstream out;
  out << "# effective configuration (defaults resolved, overrides applied)\n";
  std::string section;
  for (const KeyDef& def : key_defs()) {
    if (section != def.section) {
      section = def.section;
      out << "\n[" << section << "]\n";
    }
    out << def.key << " = " << def.get(cfg) << '\n';
  }
  return out.str();
}

}  // namespace avs
