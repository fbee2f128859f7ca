#include "avstress/ndd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "avstress/errors.hpp"
#include "avstress/hash.hpp"

namespace avs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr char kNddMagic[] = "avstress-ndd";
constexpr int kNddVersion = 1;

void format_double(char* buf, std::size_t n, double v) {
  if (v == kInf) {
    std::snprintf(buf, n, "inf");
  } else {
    std::snprintf(buf, n, "%.17g", v);
  }
}

double parse_double(const std::string& tok) {
  if (tok == "inf") return kInf;
  std::size_t pos = 0;
  const double v = std::stod(tok, &pos);
  if (pos != tok.size()) {
    throw std::runtime_error("malformed numeric field: " + tok);
  }
  return v;
}

int clamp_bin(double value, double lo, double step, int bins) {
  if (value < lo) return 0;
  const int idx = static_cast<int>((value - lo) / step);
  return std::min(idx, bins - 1);
}

}  // namespace

int snap_accel_index(double accel) {
  const int idx = static_cast<int>(std::lround((accel * 10.0 + 40.0) / 2.0));
  return std::clamp(idx, 0, kAccelActionCount - 1);
}

void write_trajectory_header(std::ostream& out) {
  out << "vehicle_id,time,speed,range,range_rate,action\n";
}

void append_trajectory(std::ostream& out, const TrajectoryRecord& rec) {
  char speed[32], range[32], rate[32], time[32];
  format_double(time, sizeof time, rec.time);
  format_double(speed, sizeof speed, rec.speed);
  format_double(range, sizeof range, rec.range);
  format_double(rate, sizeof rate, rec.range_rate);
  out << rec.vehicle_id << ',' << time << ',' << speed << ',' << range << ','
      << rate << ',' << rec.action << '\n';
}

std::size_t for_each_trajectory(
    std::istream& in, const std::function<void(const TrajectoryRecord&)>& fn) {
  std::string line;
  std::size_t count = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("vehicle_id,", 0) == 0) continue;  // header row
    }
    TrajectoryRecord rec;
    std::istringstream ls(line);
    std::string tok;
    try {
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short row");
      rec.vehicle_id = std::stoi(tok);
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short row");
      rec.time = parse_double(tok);
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short row");
      rec.speed = parse_double(tok);
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short row");
      rec.range = parse_double(tok);
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short row");
      rec.range_rate = parse_double(tok);
      if (!std::getline(ls, tok, ',')) throw std::runtime_error("short row");
      rec.action = std::stoi(tok);
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory log row " +
                               std::to_string(count + 1) + ": " + e.what());
    }
    if (rec.action < 0 || rec.action >= kActionCount) {
      throw std::runtime_error("trajectory log row " +
                               std::to_string(count + 1) +
                               ": action index out of range");
    }
    fn(rec);
    ++count;
  }
  return count;
}

int BinSpec::speed_bins() const {
  return static_cast<int>(std::lround((speed_hi - speed_lo) / speed_step));
}

int BinSpec::range_bins() const {
  return static_cast<int>(std::lround((range_hi - range_lo) / range_step)) + 1;
}

int BinSpec::rate_bins() const {
  return static_cast<int>(std::lround((rate_hi - rate_lo) / rate_step));
}

int BinSpec::total_bins() const {
  return speed_bins() * range_bins() * rate_bins();
}

int BinSpec::bin_of(double speed, double range, double range_rate) const {
  const int sb = clamp_bin(speed, speed_lo, speed_step, speed_bins());
  int rb;
  if (range >= range_hi) {
    rb = range_bins() - 1;  // unbounded top bin
  } else {
    rb = clamp_bin(range, range_lo, range_step, range_bins() - 1);
  }
  const int vb = clamp_bin(range_rate, rate_lo, rate_step, rate_bins());
  return (sb * range_bins() + rb) * rate_bins() + vb;
}

bool BinSpec::speed_in_window(double speed) const {
  return speed >= speed_lo && speed < speed_hi;
}

NddTable::NddTable(const BinSpec& bins, std::vector<double> probs,
                   std::vector<std::uint64_t> counts)
    : bins_(bins), probs_(std::move(probs)), counts_(std::move(counts)) {
  const std::size_t n = static_cast<std::size_t>(bins_.total_bins());
  if (probs_.size() != n * kActionCount || counts_.size() != n) {
    throw std::invalid_argument("NddTable: shape mismatch");
  }
  for (std::size_t b = 0; b < n; ++b) {
    if (counts_[b] == 0) continue;
    double sum = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
      const double p = probs_[b * kActionCount + a];
      if (p < 0.0) throw std::invalid_argument("NddTable: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("NddTable: probabilities do not sum to 1");
    }
  }
}

std::uint64_t NddTable::total_count() const {
  std::uint64_t total = 0;
  for (std::uint64_t c : counts_) total += c;
  return total;
}

double NddTable::probability(int bin, int action) const {
  if (action < 0 || action >= kActionCount) {
    throw std::invalid_argument("NddTable::probability: bad action");
  }
  if (bin_empty(bin)) {
    return action == kZeroAccelAction ? 1.0 : 0.0;
  }
  return probs_.at(static_cast<std::size_t>(bin) * kActionCount + action);
}

int NddTable::sample(int bin, Rng& rng) const {
  if (bin_empty(bin)) return kZeroAccelAction;
  const double u = rng.uniform();
  double cdf = 0.0;
  int last_positive = kZeroAccelAction;
  for (int a = 0; a < kActionCount; ++a) {
    const double p = probs_[static_cast<std::size_t>(bin) * kActionCount + a];
    if (p <= 0.0) continue;
    last_positive = a;
    cdf += p;
    if (u < cdf) return a;
  }
  // Rounding left u just past the accumulated mass: return the last
  // action with positive probability.
  return last_positive;
}

int NddTable::sample(double speed, double range, double range_rate,
                     Rng& rng) const {
  return sample(bins_.bin_of(speed, range, range_rate), rng);
}

std::array<bool, kActionCount> NddTable::support(int bin) const {
  std::array<bool, kActionCount> out{};
  if (bin_empty(bin)) {
    out[kZeroAccelAction] = true;
    return out;
  }
  for (int a = 0; a < kActionCount; ++a) {
    out[a] = probs_[static_cast<std::size_t>(bin) * kActionCount + a] > 0.0;
  }
  return out;
}

std::array<bool, kActionCount> NddTable::support(double speed, double range,
                                                 double range_rate) const {
  return support(bins_.bin_of(speed, range, range_rate));
}

std::string NddTable::serialize_body() const {
  std::ostringstream body;
  char buf[40];
  const int n = bins_.total_bins();
  for (int b = 0; b < n; ++b) {
    if (counts_[b] == 0) continue;
    body << "bin " << b << ' ' << counts_[b];
    for (int a = 0; a < kActionCount; ++a) {
      format_double(buf, sizeof buf,
                    probs_[static_cast<std::size_t>(b) * kActionCount + a]);
      body << ' ' << buf;
    }
    body << '\n';
  }
  return body.str();
}

std::uint64_t NddTable::checksum() const { return fnv1a(serialize_body()); }

void NddTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::string body = serialize_body();
  char buf[40];
  out << kNddMagic << ' ' << kNddVersion << '\n';
  format_double(buf, sizeof buf, bins_.speed_lo);
  out << "speed " << buf;
  format_double(buf, sizeof buf, bins_.speed_hi);
  out << ' ' << buf;
  format_double(buf, sizeof buf, bins_.speed_step);
  out << ' ' << buf << '\n';
  format_double(buf, sizeof buf, bins_.range_lo);
  out << "range " << buf;
  format_double(buf, sizeof buf, bins_.range_hi);
  out << ' ' << buf;
  format_double(buf, sizeof buf, bins_.range_step);
  out << ' ' << buf << '\n';
  format_double(buf, sizeof buf, bins_.rate_lo);
  out << "rate " << buf;
  format_double(buf, sizeof buf, bins_.rate_hi);
  out << ' ' << buf;
  format_double(buf, sizeof buf, bins_.rate_step);
  out << ' ' << buf << '\n';
  out << "actions " << kActionCount << '\n';
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(body)));
  out << "checksum " << buf << '\n';
  out << body;
  out << "end\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

NddTable NddTable::load(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingInputError("no such table file: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open table file: " + path);

  std::string line, word;
  if (!std::getline(in, line)) throw std::runtime_error("empty table file");
  {
    std::istringstream ls(line);
    int version = 0;
    ls >> word >> version;
    if (word != kNddMagic || version != kNddVersion) {
      throw std::runtime_error("unrecognized table header: " + line);
    }
  }

  BinSpec bins;
  auto read_triplet = [&](const char* name, double& lo, double& hi,
                          double& step) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated header");
    std::istringstream ls(line);
    std::string a, b, c;
    ls >> word >> a >> b >> c;
    if (word != name || a.empty() || b.empty() || c.empty()) {
      throw std::runtime_error("bad header line: " + line);
    }
    lo = parse_double(a);
    hi = parse_double(b);
    step = parse_double(c);
  };
  read_triplet("speed", bins.speed_lo, bins.speed_hi, bins.speed_step);
  read_triplet("range", bins.range_lo, bins.range_hi, bins.range_step);
  read_triplet("rate", bins.rate_lo, bins.rate_hi, bins.rate_step);

  if (!std::getline(in, line)) throw std::runtime_error("truncated header");
  {
    std::istringstream ls(line);
    int actions = 0;
    ls >> word >> actions;
    if (word != "actions" || actions != kActionCount) {
      throw std::runtime_error("action-count mismatch: " + line);
    }
  }

  if (!std::getline(in, line)) throw std::runtime_error("truncated header");
  std::uint64_t stored_sum = 0;
  {
    std::istringstream ls(line);
    std::string hex;
    ls >> word >> hex;
    if (word != "checksum" || hex.size() != 16) {
      throw std::runtime_error("bad checksum line: " + line);
    }
    stored_sum = std::stoull(hex, nullptr, 16);
  }

  const int n = bins.total_bins();
  std::vector<double> probs(static_cast<std::size_t>(n) * kActionCount, 0.0);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(n), 0);
  std::string body;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    body += line;
    body += '\n';
    std::istringstream ls(line);
    ls >> word;
    if (word != "bin") throw std::runtime_error("bad body line: " + line);
    int b = -1;
    std::uint64_t c = 0;
    ls >> b >> c;
    if (b < 0 || b >= n || c == 0) {
      throw std::runtime_error("bad bin record: " + line);
    }
    counts[static_cast<std::size_t>(b)] = c;
    for (int a = 0; a < kActionCount; ++a) {
      std::string tok;
      if (!(ls >> tok)) throw std::runtime_error("short bin record: " + line);
      probs[static_cast<std::size_t>(b) * kActionCount + a] =
          parse_double(tok);
    }
  }
  if (!saw_end) throw std::runtime_error("truncated table file (no end mark)");
  if (fnv1a(body) != stored_sum) {
    throw std::runtime_error("table checksum mismatch: " + path);
  }
  return NddTable(bins, std::move(probs), std::move(counts));
}

std::uint64_t pack_mask(const std::array<bool, kActionCount>& support) {
  std::uint64_t mask = 0;
  for (int a = 0; a < kActionCount; ++a) {
    if (support[a]) mask |= (1ULL << a);
  }
  return mask;
}

std::array<bool, kActionCount> unpack_mask(std::uint64_t mask) {
  std::array<bool, kActionCount> out{};
  for (int a = 0; a < kActionCount; ++a) {
    out[a] = (mask >> a) & 1ULL;
  }
  return out;
}

namespace {

NddTable calibrate_from_counts(
    const BinSpec& bins,
    const std::vector<std::uint64_t>& action_counts,
    const std::vector<std::uint64_t>& bin_totals, std::uint64_t kept) {
  if (kept == 0) {
    throw std::invalid_argument(
        "calibrate_ndd: no records inside the speed window");
  }
  const int n = bins.total_bins();
  std::vector<double> probs(static_cast<std::size_t>(n) * kActionCount, 0.0);
  for (int b = 0; b < n; ++b) {
    const std::uint64_t total = bin_totals[b];
    if (total == 0) continue;
    // Normalize by exact integer counts, then renormalize the vector so
    // the stored sum is 1 to the last bit.
    double sum = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
      const double p =
          static_cast<double>(
              action_counts[static_cast<std::size_t>(b) * kActionCount + a]) /
          static_cast<double>(total);
      probs[static_cast<std::size_t>(b) * kActionCount + a] = p;
      sum += p;
    }
    for (int a = 0; a < kActionCount; ++a) {
      probs[static_cast<std::size_t>(b) * kActionCount + a] /= sum;
    }
  }
  return NddTable(bins, std::move(probs), bin_totals);
}

}  // namespace

NddTable calibrate_ndd(const std::vector<TrajectoryRecord>& records,
                       const BinSpec& bins) {
  const int n = bins.total_bins();
  std::vector<std::uint64_t> action_counts(
      static_cast<std::size_t>(n) * kActionCount, 0);
  std::vector<std::uint64_t> bin_totals(static_cast<std::size_t>(n), 0);
  std::uint64_t kept = 0;
  for (const TrajectoryRecord& rec : records) {
    if (!bins.speed_in_window(rec.speed)) continue;
    const int b = bins.bin_of(rec.speed, rec.range, rec.range_rate);
    ++action_counts[static_cast<std::size_t>(b) * kActionCount + rec.action];
    ++bin_totals[static_cast<std::size_t>(b)];
    ++kept;
  }
  return calibrate_from_counts(bins, action_counts, bin_totals, kept);
}

NddTable calibrate_ndd(std::istream& records, const BinSpec& bins) {
  const int n = bins.total_bins();
  std::vector<std::uint64_t> action_counts(
      static_cast<std::size_t>(n) * kActionCount, 0);
  std::vector<std::uint64_t> bin_totals(static_cast<std::size_t>(n), 0);
  std::uint64_t kept = 0;
  for_each_trajectory(records, [&](const TrajectoryRecord& rec) {
    if (!bins.speed_in_window(rec.speed)) return;
    const int b = bins.bin_of(rec.speed, rec.range, rec.range_rate);
    ++action_counts[static_cast<std::size_t>(b) * kActionCount + rec.action];
    ++bin_totals[static_cast<std::size_t>(b)];
    ++kept;
  });
  return calibrate_from_counts(bins, action_counts, bin_totals, kept);
}

std::size_t synth_trajectories(const SynthConfig& cfg, std::uint64_t seed,
                               std::ostream& out) {
  if (cfg.episodes <= 0 || cfg.steps_per_episode <= 0 || cfg.dt <= 0.0) {
    throw std::invalid_argument("synth_trajectories: bad configuration");
  }
  write_trajectory_header(out);
  std::size_t written = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(ep)));

    IdmParams idm = cfg.idm;
    // Desired speeds past 40 keep the top of the calibration speed window
    // populated with cruising data instead of leaving those bins empty.
    idm.v0 = rng.uniform(25.0, 41.0);
    idm.T = rng.uniform(1.0, 1.8);

    double v = rng.uniform(20.0, 40.0);
    bool has_leader = false;
    double v_lead = 0.0;
    double gap = 0.0;

    // Draws a fresh traffic context: at episode start, after lane changes
    // (the vehicle faces a new leader), and after virtual contact. A
    // fraction of contexts begin close and closing so the data covers the
    // braking responses the simulation will later need to look up.
    auto reroll_context = [&]() {
      has_leader = rng.uniform() >= cfg.leaderless_fraction;
      if (!has_leader) return;
      if (rng.uniform() < cfg.approach_fraction) {
        v_lead = std::clamp(v - rng.uniform(2.0, 10.0), 18.0, 40.0);
        gap = rng.uniform(3.0, 30.0);
      } else {
        v_lead = rng.uniform(20.0, 40.0);
        gap = rng.uniform(10.0, 140.0);
      }
    };
    reroll_context();

    for (int step = 0; step < cfg.steps_per_episode; ++step) {
      const double range = has_leader
                               ? gap
                               : std::numeric_limits<double>::infinity();
      const double rate = has_leader ? (v_lead - v) : 0.0;

      TrajectoryRecord rec;
      rec.vehicle_id = ep;
      rec.time = step * cfg.dt;
      rec.speed = v;
      rec.range = range;
      rec.range_rate = rate;

      const bool change_lane =
          rng.uniform() < cfg.lane_change_prob && (!has_leader || gap > 10.0);
      double exec_accel;
      if (change_lane) {
        rec.action = (rng.uniform() < 0.5) ? kLeftAction : kRightAction;
        exec_accel = 0.0;
      } else {
        const double noisy =
            idm_acceleration(v, range, -rate, idm) +
            rng.normal(0.0, cfg.accel_noise_sd);
        rec.action = snap_accel_index(noisy);
        exec_accel = decode_action(rec.action).accel;
      }
      append_trajectory(out, rec);
      ++written;

      // Advance the pair one step; the follower stops rather than
      // reversing.
      double v_next = v + exec_accel * cfg.dt;
      double advance;
      if (v_next < 0.0) {
        const double t_stop = -v / exec_accel;
        advance = v * t_stop + 0.5 * exec_accel * t_stop * t_stop;
        v_next = 0.0;
      } else {
        advance = v * cfg.dt + 0.5 * exec_accel * cfg.dt * cfg.dt;
      }
      if (has_leader) {
        gap += v_lead * cfg.dt - advance;
        v_lead = std::clamp(v_lead + rng.normal(0.0, 0.5), 18.0, 40.0);
        if (gap <= 1.0) reroll_context();
      }
      v = v_next;
      if (change_lane) reroll_context();
    }
  }
  return written;
}

}  // namespace avs
