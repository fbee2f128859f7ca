#include "avstress/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "avstress/errors.hpp"
#include "avstress/hash.hpp"
#include "avstress/scenario_io.hpp"

namespace avs {
namespace fs = std::filesystem;

namespace {

// Each stage draws from its own substream of the master seed so that, for
// example, evaluation episodes never replicate training episodes.
std::uint64_t stage_seed(const RunConfig& cfg, const char* stage) {
  return Rng::derive(cfg.seed, fnv1a(std::string("stage:") + stage));
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string require_path(const std::string& value, const char* key) {
  if (value.empty())
    throw MissingInputError(std::string("paths.") + key +
                            " is not set; point it at the upstream artifact");
  return value;
}

// ---- stages ---------------------------------------------------------------

std::string stage_synth(const RunConfig& cfg, const fs::path& out_dir) {
  const fs::path path = out_dir / "trajectories.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t n =
      synth_trajectories(cfg.synth, stage_seed(cfg, "synth-ndd"), out);
  if (!out) throw std::runtime_error("failed writing " + path.string());

  std::ostringstream rep;
  rep << "wrote " << n << " trajectory records (" << cfg.synth.episodes
      << " episodes x " << cfg.synth.steps_per_episode << " steps) to "
      << path.string() << '\n';
  return rep.str();
}

std::string stage_calibrate(const RunConfig& cfg, const fs::path& out_dir) {
  const std::string src = require_path(cfg.trajectories, "trajectories");
  std::ifstream in(src);
  if (!in) throw MissingInputError("cannot open trajectory log " + src);
  const NddTable table = calibrate_ndd(in, cfg.bins);

  const fs::path path = out_dir / "ndd.txt";
  table.save(path.string());

  int nonempty = 0;
  for (int b = 0; b < table.bins().total_bins(); ++b)
    if (!table.bin_empty(b)) ++nonempty;

  std::ostringstream rep;
  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(table.checksum()));
  rep << "calibrated " << table.total_count() << " records into " << nonempty
      << " of " << table.bins().total_bins() << " state bins\n"
      << "table " << path.string() << " (checksum " << checksum << ")\n";
  return rep.str();
}

std::string stage_train(const RunConfig& cfg, const fs::path& out_dir) {
  const NddTable table = NddTable::load(require_path(cfg.ndd, "ndd"));
  HighwayEnv env(cfg.env, &table);
  const NetworkSpec spec = cfg.network_spec();

  TrainResult prev;
  const TrainResult* resume_from = nullptr;
  if (cfg.resume) {
    prev = load_checkpoint(require_path(cfg.checkpoint, "checkpoint"));
    resume_from = &prev;
  }
  const std::size_t end_steps =
      (resume_from ? prev.env_steps : 0) + cfg.train.total_steps;

  const fs::path log_path = out_dir / "train_log.csv";
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  log << "step,episode,episode_return,rolling_crash_rate,eps,loss\n";

  TrainHooks hooks;
  hooks.on_episode = [&log](const TrainLogEntry& e) {
    log << format_log_entry(e) << '\n';
  };
  hooks.on_checkpoint = [&](const TrainResult& state) {
    if (state.env_steps == end_steps) return;  // final save happens below
    const fs::path p =
        out_dir / ("checkpoint_step" + std::to_string(state.env_steps) + ".bin");
    save_checkpoint(p.string(), state);
  };

  const TrainResult result =
      train(env, spec, cfg.train, stage_seed(cfg, "train"), hooks, resume_from);
  const fs::path ckpt = out_dir / "checkpoint.bin";
  save_checkpoint(ckpt.string(), result);
  if (!log) throw std::runtime_error("failed writing " + log_path.string());

  std::ostringstream rep;
  rep << "trained " << cfg.train.total_steps << " env steps ("
      << result.episodes << " episodes, " << result.updates << " updates";
  if (resume_from) rep << ", resumed at step " << prev.env_steps;
  rep << ")\n";
  if (!result.log.empty()) {
    rep << "final rolling crash rate "
        << format_double(result.log.back().rolling_crash_rate) << ", eps "
        << format_double(result.log.back().eps) << '\n';
  }
  rep << "checkpoint " << ckpt.string() << "\nlog " << log_path.string() << '\n';
  return rep.str();
}

std::string write_run_outputs(const RunConfig& cfg, const RunOutputs& outputs,
                              const fs::path& out_dir) {
  const fs::path cc_path = out_dir / "corner_cases.jsonl";
  std::ofstream cc(cc_path);
  if (!cc) throw std::runtime_error("cannot write " + cc_path.string());
  for (const CornerCaseRecord& r : outputs.corner_cases) append_corner_case(cc, r);
  if (!cc) throw std::runtime_error("failed writing " + cc_path.string());

  if (cfg.keep_all) {
    const fs::path sc_path = out_dir / "scenarios.jsonl";
    std::ofstream sc(sc_path);
    if (!sc) throw std::runtime_error("cannot write " + sc_path.string());
    for (const Scenario& s : outputs.scenarios) append_scenario(sc, s);
    if (!sc) throw std::runtime_error("failed writing " + sc_path.string());
  }

  write_text_file(out_dir / "summary.json", summary_to_json(outputs.summary));
  const std::string text = summary_to_text(outputs.summary);
  write_text_file(out_dir / "summary.txt", text);
  return text + "corner cases " + cc_path.string() + '\n';
}

std::string stage_generate(const RunConfig& cfg, const fs::path& out_dir) {
  const NddTable table = NddTable::load(require_path(cfg.ndd, "ndd"));
  const TrainResult ck =
      load_checkpoint(require_path(cfg.checkpoint, "checkpoint"));
  if (ck.online.spec().input_size != kObservationSize ||
      ck.online.spec().action_count != kActionCount) {
    throw std::runtime_error(
        "checkpoint network does not fit the highway observation/action "
        "layout");
  }
  const RunOutputs outputs = run_episodes(
      cfg.env, table, &ck.online, cfg.episodes, stage_seed(cfg, "generate"),
      cfg.workers, cfg.keep_all, cfg.crash_types);
  return write_run_outputs(cfg, outputs, out_dir);
}

std::string stage_baseline(const RunConfig& cfg, const fs::path& out_dir) {
  const NddTable table = NddTable::load(require_path(cfg.ndd, "ndd"));
  const RunOutputs outputs = run_episodes(
      cfg.env, table, nullptr, cfg.episodes, stage_seed(cfg, "baseline"),
      cfg.workers, cfg.keep_all, cfg.crash_types);
  return write_run_outputs(cfg, outputs, out_dir);
}

std::string stage_analyze(const RunConfig& cfg, const fs::path& out_dir) {
  const std::string src = require_path(cfg.corner_cases, "corner_cases");
  const std::vector<CornerCaseRecord> records = load_corner_cases(src);
  if (records.empty())
    throw MissingInputError("no records in corner-case library " + src);

  std::ostringstream rep;
  rep << "analyzing " << records.size() << " corner cases from " << src << '\n';
  int produced = 0;
  for (int k : cfg.analyze.k_values) {
    try {
      const ClusterReport report =
          analyze_records(records, k, cfg.analyze, stage_seed(cfg, "analyze"));
      emit_report(report, records, out_dir.string());
      int clusters = 0;
      for (int label : report.dbscan_labels)
        clusters = std::max(clusters, label + 1);
      rep << "k=" << k << ": " << report.record_index.size() << " cases, "
          << clusters << " cluster(s), " << report.rare_rows.size()
          << " rare, " << report.typical_rows.size() << " typical (skipped "
          << report.skipped_short << " short)\n";
      ++produced;
    } catch (const MissingInputError& e) {
      // A window longer than most episodes is expected for large k; note
      // it and keep the remaining windows useful.
      rep << "k=" << k << ": skipped (" << e.what() << ")\n";
    }
  }
  if (produced == 0)
    throw MissingInputError(
        "no analysis window has enough usable corner cases in " + src);
  write_text_file(out_dir / "analysis.txt", rep.str());
  return rep.str();
}

std::string stage_replay(const RunConfig& cfg, const fs::path& out_dir) {
  const std::string src = require_path(cfg.corner_cases, "corner_cases");
  const std::vector<CornerCaseRecord> records = load_corner_cases(src);
  if (records.empty())
    throw MissingInputError("no records in corner-case library " + src);
  if (cfg.replay_index >= records.size()) {
    throw ConfigError("replay.index " + std::to_string(cfg.replay_index) +
                      " out of range; library holds " +
                      std::to_string(records.size()) + " records");
  }
  const NddTable table = NddTable::load(require_path(cfg.ndd, "ndd"));

  const CornerCaseRecord& record = records[cfg.replay_index];
  replay_scenario(record.scenario, table);

  std::ostringstream rep;
  rep << "record " << cfg.replay_index << " (seed " << record.scenario.seed
      << ", mode " << record.scenario.mode << "): re-simulated "
      << record.scenario.actions.size() << " steps, all "
      << record.scenario.scenes.size()
      << " scenes bit-identical, crash reproduced (type " << record.crash_type
      << ", background vehicle " << record.critical_bv << ")\n";
  write_text_file(out_dir / "replay_report.txt", rep.str());
  return rep.str();
}

}  // namespace

bool known_stage(const std::string& name) {
  return name == "synth-ndd" || name == "calibrate" || name == "train" ||
         name == "generate" || name == "baseline" || name == "analyze" ||
         name == "replay";
}

std::string resolve_out_dir(const RunConfig& cfg, const std::string& stage,
                            const std::string& out_override) {
  if (!out_override.empty()) return out_override;

  std::string root = cfg.out_root;
  if (root.empty()) {
    if (const char* env_root = std::getenv("AVSTRESS_OUT_ROOT");
        env_root != nullptr && env_root[0] != '\0') {
      root = env_root;
    } else {
      root = "runs";
    }
  }

  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);

  fs::path base = fs::path(root) / (stage + "_" + stamp);
  fs::path candidate = base;
  for (int i = 1; fs::exists(candidate); ++i)
    candidate = base.string() + "_" + std::to_string(i);
  return candidate.string();
}

StageResult run_stage(const std::string& stage, const RunConfig& cfg,
                      const std::string& out_override) {
  if (!known_stage(stage)) throw ConfigError("unknown subcommand '" + stage + "'");
  cfg.validate();

  const fs::path out_dir = resolve_out_dir(cfg, stage, out_override);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec && !fs::is_directory(out_dir))
    throw std::runtime_error("cannot create output directory " +
                             out_dir.string() + ": " + ec.message());
  write_text_file(out_dir / "config_resolved.ini", emit_resolved(cfg));

  StageResult result;
  result.out_dir = out_dir.string();
  if (stage == "synth-ndd") {
    result.report = stage_synth(cfg, out_dir);
  } else if (stage == "calibrate") {
    result.report = stage_calibrate(cfg, out_dir);
  } else if (stage == "train") {
    result.report = stage_train(cfg, out_dir);
  } else if (stage == "generate") {
    result.report = stage_generate(cfg, out_dir);
  } else if (stage == "baseline") {
    result.report = stage_baseline(cfg, out_dir);
  } else if (stage == "analyze") {
    result.report = stage_analyze(cfg, out_dir);
  } else {
    result.report = stage_replay(cfg, out_dir);
  }
  return result;
}

}  // namespace avs
