// Command-line front end for the traffic stress-testing pipeline. Talks to
// the library exclusively through its C interface, same as any external
// embedder would.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avstress.h"

namespace {

int exit_code_for(avs_status status) {
  switch (status) {
    case AVS_OK:
      return 0;
    case AVS_ERR_CONFIG:
      return 2;
    case AVS_ERR_MISSING_INPUT:
      return 3;
    default:
      return 1;
  }
}

struct RunDeleter {
  void operator()(avs_run* run) const { avs_run_free(run); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"highway traffic stress testing: naturalistic calibration, "
               "adversarial training, corner-case generation and analysis"};
  app.set_version_flag("--version", std::string(avs_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  bool workers_given = false;
  std::vector<std::string> overrides;
  std::uint64_t replay_index = 0;
  bool replay_index_given = false;
  long long episodes = 0;
  bool episodes_given = false;

  const struct {
    const char* name;
    const char* help;
  } stages[] = {
      {"synth-ndd", "write a synthetic naturalistic trajectory log"},
      {"calibrate", "build the empirical action table from trajectories"},
      {"train", "train the adversarial background-vehicle policy"},
      {"generate", "run the trained policy and harvest corner cases"},
      {"baseline", "run the pure naturalistic environment for comparison"},
      {"analyze", "cluster and classify a corner-case library"},
      {"replay", "re-simulate one corner case and verify the crash"},
  };

  for (const auto& stage : stages) {
    CLI::App* sub = app.add_subcommand(stage.name, stage.help);
    sub->add_option("--config", config_path, "INI configuration file");
    sub->add_option("--out", out_dir,
                    "exact output directory (default: timestamped)");
    sub->add_option("--seed", seed, "master random seed (run.seed)")
        ->trigger_on_parse()
        ->each([&seed_given](const std::string&) { seed_given = true; });
    sub->add_option("--workers", workers, "parallel episode workers")
        ->each([&workers_given](const std::string&) { workers_given = true; });
    sub->add_option("--set", overrides,
                    "override one config key: section.key=value (repeatable, "
                    "applied last)")
        ->take_all();
    if (std::string(stage.name) == "replay") {
      sub->add_option("--index", replay_index, "corner-case record to replay")
          ->each([&replay_index_given](const std::string&) {
            replay_index_given = true;
          });
    }
    if (std::string(stage.name) == "generate" ||
        std::string(stage.name) == "baseline") {
      sub->add_option("--episodes", episodes, "evaluation episode count")
          ->each([&episodes_given](const std::string&) {
            episodes_given = true;
          });
    }
  }

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  std::unique_ptr<avs_run, RunDeleter> run(avs_run_new());
  if (!run) {
    std::fprintf(stderr, "error: out of memory\n");
    return 1;
  }

  const auto fail = [&run](avs_status status) {
    std::fprintf(stderr, "error: %s\n", avs_run_last_error(run.get()));
    return exit_code_for(status);
  };

  if (!config_path.empty()) {
    if (const avs_status s = avs_run_load_config(run.get(), config_path.c_str());
        s != AVS_OK)
      return fail(s);
  }
  const auto set = [&run](const std::string& kv) {
    return avs_run_set(run.get(), kv.c_str());
  };
  if (seed_given) {
    if (const avs_status s = set("run.seed=" + std::to_string(seed)); s != AVS_OK)
      return fail(s);
  }
  if (workers_given) {
    if (const avs_status s = set("run.workers=" + std::to_string(workers));
        s != AVS_OK)
      return fail(s);
  }
  if (episodes_given) {
    if (const avs_status s = set("generate.episodes=" + std::to_string(episodes));
        s != AVS_OK)
      return fail(s);
  }
  if (replay_index_given) {
    if (const avs_status s = set("replay.index=" + std::to_string(replay_index));
        s != AVS_OK)
      return fail(s);
  }
  for (const std::string& kv : overrides) {
    if (const avs_status s = set(kv); s != AVS_OK) return fail(s);
  }

  const avs_status status = avs_run_execute(
      run.get(), stage.c_str(), out_dir.empty() ? nullptr : out_dir.c_str());
  if (status != AVS_OK) return fail(status);

  std::printf("%s", avs_run_report(run.get()));
  std::printf("outputs: %s\n", avs_run_out_dir(run.get()));
  return 0;
}
