#include "avstress.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "avstress/config.hpp"
#include "avstress/errors.hpp"
#include "avstress/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

// Exception -> status boundary. No exception may cross into C callers.
template <typename F>
avs_status guarded(std::string& err, F&& fn) {
  try {
    fn();
    err.clear();
    return AVS_OK;
  } catch (const avs::ConfigError& e) {
    err = e.what();
    return AVS_ERR_CONFIG;
  } catch (const avs::MissingInputError& e) {
    err = e.what();
    return AVS_ERR_MISSING_INPUT;
  } catch (const avs::StateError& e) {
    err = e.what();
    return AVS_ERR_STATE;
  } catch (const std::invalid_argument& e) {
    err = e.what();
    return AVS_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    err = e.what();
    return AVS_ERR_RUNTIME;
  } catch (...) {
    err = "unknown failure";
    return AVS_ERR_RUNTIME;
  }
}

}  // namespace

struct avs_run {
  avs::RunConfig cfg;
  std::string out_dir;
  std::string report;
  std::string last_error;
};

struct avs_env {
  avs::RunConfig cfg;
  avs::NddTable table;
  std::unique_ptr<avs::HighwayEnv> env;
  std::string last_error;
};

extern "C" {

const char* avs_version(void) { return "1.0.0"; }

const char* avs_last_error(void) { return g_last_error.c_str(); }

// ---- runs -----------------------------------------------------------------

avs_run* avs_run_new(void) { return new (std::nothrow) avs_run(); }

void avs_run_free(avs_run* run) { delete run; }

avs_status avs_run_load_config(avs_run* run, const char* path) {
  if (run == nullptr) return AVS_ERR_INVALID_ARGUMENT;
  return guarded(run->last_error, [&] {
    if (path == nullptr) throw std::invalid_argument("config path is NULL");
    avs::apply_config_file(run->cfg, path);
  });
}

avs_status avs_run_set(avs_run* run, const char* assignment) {
  if (run == nullptr) return AVS_ERR_INVALID_ARGUMENT;
  return guarded(run->last_error, [&] {
    if (assignment == nullptr)
      throw std::invalid_argument("assignment is NULL");
    avs::apply_override(run->cfg, assignment);
  });
}

avs_status avs_run_execute(avs_run* run, const char* subcommand,
                           const char* out_dir) {
  if (run == nullptr) return AVS_ERR_INVALID_ARGUMENT;
  return guarded(run->last_error, [&] {
    if (subcommand == nullptr)
      throw std::invalid_argument("subcommand is NULL");
    const avs::StageResult result = avs::run_stage(
        subcommand, run->cfg, out_dir == nullptr ? "" : out_dir);
    run->out_dir = result.out_dir;
    run->report = result.report;
  });
}

const char* avs_run_out_dir(const avs_run* run) {
  return run == nullptr ? "" : run->out_dir.c_str();
}

const char* avs_run_report(const avs_run* run) {
  return run == nullptr ? "" : run->report.c_str();
}

const char* avs_run_last_error(const avs_run* run) {
  return run == nullptr ? "avs_run handle is NULL" : run->last_error.c_str();
}

// ---- environments -----------------------------------------------------------

avs_env* avs_env_new(const char* config_path, const char* ndd_path) {
  auto env = std::make_unique<avs_env>();
  const avs_status status = guarded(g_last_error, [&] {
    if (ndd_path == nullptr)
      throw std::invalid_argument("ndd_path is NULL");
    if (config_path != nullptr)
      avs::apply_config_file(env->cfg, config_path);
    env->cfg.validate();
    env->table = avs::NddTable::load(ndd_path);
    env->env = std::make_unique<avs::HighwayEnv>(env->cfg.env, &env->table);
  });
  if (status != AVS_OK) return nullptr;
  return env.release();
}

void avs_env_free(avs_env* env) { delete env; }

int avs_env_observation_size(const avs_env* env) {
  return env == nullptr ? 0 : env->env->observation_size();
}

int avs_env_action_count(const avs_env* env) {
  return env == nullptr ? 0 : env->env->action_count();
}

avs_status avs_env_reset(avs_env* env, uint64_t seed, double* obs) {
  if (env == nullptr) return AVS_ERR_INVALID_ARGUMENT;
  return guarded(env->last_error, [&] {
    if (obs == nullptr) throw std::invalid_argument("obs is NULL");
    const std::vector<double> v = env->env->reset(seed);
    std::memcpy(obs, v.data(), v.size() * sizeof(double));
  });
}

avs_status avs_env_step(avs_env* env, int action, double* obs, double* reward,
                        int* done) {
  if (env == nullptr) return AVS_ERR_INVALID_ARGUMENT;
  return guarded(env->last_error, [&] {
    if (obs == nullptr || reward == nullptr || done == nullptr)
      throw std::invalid_argument("output pointer is NULL");
    const avs::StepOutcome out = env->env->step(action);
    std::memcpy(obs, out.observation.data(),
                out.observation.size() * sizeof(double));
    *reward = out.reward;
    *done = out.done ? 1 : 0;
  });
}

avs_status avs_env_action_mask(const avs_env* env, uint64_t* mask) {
  if (env == nullptr) return AVS_ERR_INVALID_ARGUMENT;
  // The mask query is logically const; the error slot is still per-handle.
  auto* mutable_env = const_cast<avs_env*>(env);
  return guarded(mutable_env->last_error, [&] {
    if (mask == nullptr) throw std::invalid_argument("mask is NULL");
    *mask = env->env->action_mask();
  });
}

const char* avs_env_last_error(const avs_env* env) {
  return env == nullptr ? "avs_env handle is NULL" : env->last_error.c_str();
}

}  // extern "C"
