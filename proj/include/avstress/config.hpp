#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avstress/analyzer.hpp"
#include "avstress/env.hpp"
#include "avstress/generator.hpp"
#include "avstress/learner.hpp"
#include "avstress/ndd.hpp"

namespace avs {

/// Every tunable of the pipeline in one place. Defaults reproduce the
/// reference setup; an INI-style file and command-line overrides adjust
/// individual keys. Unknown sections or keys are rejected outright so a
/// typo cannot silently run the defaults.
struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_root;  // empty = $AVSTRESS_OUT_ROOT or ./runs

  // [road] + [env] + [cav]
  EnvConfig env;

  // [bins]
  BinSpec bins;

  // [synth]
  SynthConfig synth;

  // [network]; the input/output widths are fixed by the observation and
  // action layouts, only the hidden sizes and input scaling are tunable.
  int trunk_depth = 4;
  int trunk_width = 128;
  int stream_width = 128;
  bool scale_observations = true;

  // [train]
  TrainConfig train;
  bool resume = false;

  // [generate]
  int episodes = 2000;
  bool keep_all = false;

  // [crash_types]
  CrashTypeParams crash_types;

  // [analyze]
  AnalyzerConfig analyze;

  // [replay]
  std::size_t replay_index = 0;

  // [paths] - stage handoff artifacts
  std::string trajectories;
  std::string ndd;
  std::string checkpoint;
  std::string corner_cases;

  /// Network shape implied by the config (includes the observation
  /// scaling when enabled).
  NetworkSpec network_spec() const;

  /// Cross-field validation; throws ConfigError.
  void validate() const;
};

/// Parses INI-style text: `[section]` headers, `key = value` lines, and
/// full-line comments starting with '#' or ';'. Throws ConfigError on
/// syntax errors or unknown keys.
void apply_config_text(RunConfig& cfg, const std::string& text,
                       const std::string& source_name);

/// Reads and applies a config file. Throws MissingInputError when the
/// file cannot be opened.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Applies one `section.key=value` override (the --set flag).
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Canonical rendering of every key with its effective value; writing
/// this into the output directory makes each run self-describing. The
/// text parses back into an identical config.
std::string emit_resolved(const RunConfig& cfg);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace avs
