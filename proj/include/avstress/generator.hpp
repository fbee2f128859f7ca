#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "avstress/network.hpp"
#include "avstress/scenario_io.hpp"

namespace avs {

/// Crash taxonomy thresholds (radians). The classifier is a total rule
/// over relative heading and the contact face.
struct CrashTypeParams {
  double rear_heading = 0.1;  // |dh| below this = same-direction, in line
  double side_heading = 0.3;  // |dh| below this = same-direction sideswipe
};

/// Deterministic crash type in 1..5:
///   1  the background vehicle strikes the other from behind
///   2  struck from behind (mirror of 1)
///   3  opposing-direction contact (|dh| > pi/2)
///   4  same-direction sideswipe (lateral contact face, |dh| < side)
///   5  angled collision (everything else)
/// The event's (a, b) pair orders offsets as b relative to a; for crashes
/// involving the vehicle under test, a is the CAV.
int classify_crash_type(const CrashEvent& crash, const Scene& scene_at_crash,
                        const CrashTypeParams& p = {});

/// Fixed-edge histogram with clamped tails, so totals always equal the
/// sample count and reports normalize exactly. The running sum clamps the
/// same way: mean() is the mean of the metric capped to [lo, hi].
struct MetricHistogram {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 1;
  std::vector<std::uint64_t> counts;
  std::uint64_t samples = 0;
  double sum = 0.0;

  MetricHistogram() : counts(1, 0) {}
  MetricHistogram(double lo_, double hi_, int bins_)
      : lo(lo_), hi(hi_), bins(bins_), counts(static_cast<std::size_t>(bins_), 0) {}

  void add(double v);
  void merge(const MetricHistogram& other);
  double mean() const { return samples == 0 ? 0.0 : sum / static_cast<double>(samples); }
};

MetricHistogram make_bbd_histogram();  // 0..120 m, 5 m bins
MetricHistogram make_ttc_histogram();  // 0..30 s, 1 s bins

/// Aggregate statistics of one batch run.
struct RunSummary {
  std::string mode;
  std::uint64_t episodes = 0;
  std::uint64_t cav_crashes = 0;  // episodes ending in contact with the CAV
  std::uint64_t bv_crashes = 0;   // episodes ending in BV-BV contact only
  double crash_rate = 0.0;        // cav_crashes / episodes
  double distance_miles = 0.0;    // CAV distance driven over all episodes
  std::uint64_t decision_steps = 0;
  MetricHistogram front_bbd = make_bbd_histogram();
  MetricHistogram front_ttc = make_ttc_histogram();
  MetricHistogram rear_bbd = make_bbd_histogram();
  MetricHistogram rear_ttc = make_ttc_histogram();
  std::array<std::uint64_t, 6> crash_types{};  // [1..5]; CAV crashes only
};

/// Per-step CAV exposure metrics recomputed from logs (front and rear
/// same-lane neighbors). Pure; the batch runner accumulates the same
/// numbers incrementally.
void safety_metrics(const std::vector<Scenario>& logs, MetricHistogram& front_bbd,
                    MetricHistogram& front_ttc, MetricHistogram& rear_bbd,
                    MetricHistogram& rear_ttc);

struct RunOutputs {
  std::vector<CornerCaseRecord> corner_cases;  // every crash episode, in order
  std::vector<Scenario> scenarios;  // all episodes when keep_all, else empty
  RunSummary summary;
};

/// Runs `episodes` evaluation episodes. `policy` drives the controlled
/// vehicle greedily (eps = 0); pass nullptr for the naturalistic baseline
/// where the controlled vehicle samples the action table like everyone
/// else (summary mode "nde"). Episodes parallelize over `workers` with
/// per-episode seed substreams; outputs are merged in episode order, so
/// results do not depend on the worker count.
RunOutputs run_episodes(const EnvConfig& env_cfg, const NddTable& table,
                        const Network* policy, int episodes,
                        std::uint64_t seed, int workers, bool keep_all,
                        const CrashTypeParams& ctp = {});

/// Re-simulates a logged scenario from its seed and recorded actions.
/// Throws std::runtime_error on any divergence: scene mismatch beyond
/// bit-exact tolerance 0, crash presence/identity mismatch, or action
/// table checksum mismatch.
void replay_scenario(const Scenario& s, const NddTable& table);

/// Machine- and human-readable summary renderings.
std::string summary_to_json(const RunSummary& s);
std::string summary_to_text(const RunSummary& s);

}  // namespace avs
