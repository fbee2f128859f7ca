#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "avstress/env.hpp"
#include "avstress/types.hpp"

namespace avs {

/// A full logged episode. Self-describing: carries everything needed to
/// re-simulate it bit-exactly (environment parameters, seed, the action
/// trail, and the checksum of the action table that drove background
/// traffic). Scenes are spaced dt apart except the final scene, which
/// sits at the exact collision sub-step when the episode ended in a
/// crash. `mode` is the run label: "unbounded", "ndd_bounded", or "nde"
/// (baseline traffic with no adversarial policy).
struct Scenario {
  std::uint32_t version = 1;
  std::uint64_t seed = 0;
  std::string mode = "unbounded";
  std::uint64_t ndd_checksum = 0;
  EnvConfig env;
  double vehicle_length = 5.0;
  double vehicle_width = 2.0;
  std::vector<Scene> scenes;
  std::vector<ActionRecord> actions;  // always scenes.size() - 1 records
  std::optional<CrashEvent> crash;
};

/// One harvested crash episode plus its classification.
struct CornerCaseRecord {
  Scenario scenario;
  CrashEvent crash;
  int critical_bv = 0;  // the background vehicle the analysis tracks
  int crash_type = 0;   // 1..5
};

/// Line-delimited scenario files: one JSON object per line.
void append_scenario(std::ostream& out, const Scenario& s);
std::vector<Scenario> read_scenarios(std::istream& in);

/// Corner-case library files: scenario plus crash metadata per line.
void append_corner_case(std::ostream& out, const CornerCaseRecord& r);
std::vector<CornerCaseRecord> read_corner_cases(std::istream& in);

/// Path helpers; loaders throw MissingInputError when the file is absent
/// and std::runtime_error on malformed content.
std::vector<CornerCaseRecord> load_corner_cases(const std::string& path);
std::vector<Scenario> load_scenarios(const std::string& path);

}  // namespace avs
