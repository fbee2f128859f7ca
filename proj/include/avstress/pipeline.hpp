#pragma once

#include <string>

#include "avstress/config.hpp"

namespace avs {

/// Outcome of one CLI stage: where the artifacts went plus a short
/// human-readable report for the terminal.
struct StageResult {
  std::string out_dir;
  std::string report;
};

/// True for the subcommands run_stage accepts.
bool known_stage(const std::string& name);

/// Where a stage will write: `out_override` verbatim when given,
/// otherwise a fresh timestamped subdirectory of the output root
/// (config out_root, else $AVSTRESS_OUT_ROOT, else ./runs).
std::string resolve_out_dir(const RunConfig& cfg, const std::string& stage,
                            const std::string& out_override);

/// Executes one pipeline stage end to end: validates the config, creates
/// the output directory, echoes the resolved config into it, runs the
/// stage, and writes its artifacts. Throws ConfigError for bad
/// configuration, MissingInputError for absent upstream artifacts, and
/// std::runtime_error for execution failures.
StageResult run_stage(const std::string& stage, const RunConfig& cfg,
                      const std::string& out_override = "");

}  // namespace avs
