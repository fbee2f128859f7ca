/* C interface to the traffic stress-testing toolkit.
 *
 * Two handle families:
 *   avs_run  - configure and execute whole pipeline stages (the same
 *              operations the command-line tool exposes).
 *   avs_env  - step the highway decision process directly, for callers
 *              that bring their own control loop.
 *
 * Every operation returns avs_status; a nonzero status leaves a
 * description in the handle's last-error buffer. Handle constructors
 * return NULL on failure and leave the description in the thread-local
 * buffer read by avs_last_error(). All strings returned by the library
 * stay owned by the library and remain valid until the next call on the
 * same handle (or, for avs_last_error, the next failing constructor on
 * the same thread).
 */
#ifndef AVSTRESS_H
#define AVSTRESS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avs_status {
  AVS_OK = 0,
  AVS_ERR_RUNTIME = 1,          /* execution failure                     */
  AVS_ERR_CONFIG = 2,           /* bad configuration value or key        */
  AVS_ERR_MISSING_INPUT = 3,    /* required upstream artifact absent     */
  AVS_ERR_INVALID_ARGUMENT = 4, /* bad call argument (action, pointer)   */
  AVS_ERR_STATE = 5             /* call out of sequence (e.g. no reset)  */
} avs_status;

/* Library version, "major.minor.patch". */
const char* avs_version(void);

/* Thread-local message from the most recent failed constructor. */
const char* avs_last_error(void);

/* ---- pipeline runs ---------------------------------------------------- */

typedef struct avs_run avs_run;

/* Fresh run with every key at its default. Never fails except on         */
/* allocation exhaustion (returns NULL).                                   */
avs_run* avs_run_new(void);
void avs_run_free(avs_run* run);

/* Applies an INI config file on top of the current values. */
avs_status avs_run_load_config(avs_run* run, const char* path);

/* Applies one "section.key=value" override. */
avs_status avs_run_set(avs_run* run, const char* assignment);

/* Executes one stage: synth-ndd, calibrate, train, generate, baseline,
 * analyze, or replay. out_dir NULL or empty selects a timestamped
 * directory under the configured output root. */
avs_status avs_run_execute(avs_run* run, const char* subcommand,
                           const char* out_dir);

/* Valid after a successful execute. */
const char* avs_run_out_dir(const avs_run* run);
const char* avs_run_report(const avs_run* run);

const char* avs_run_last_error(const avs_run* run);

/* ---- direct environment access ----------------------------------------- */

typedef struct avs_env avs_env;

/* Builds the highway decision process. config_path (optional, may be
 * NULL) is the same INI file the pipeline uses; ndd_path must name a
 * calibrated action table. Returns NULL on failure (see avs_last_error). */
avs_env* avs_env_new(const char* config_path, const char* ndd_path);
void avs_env_free(avs_env* env);

int avs_env_observation_size(const avs_env* env);
int avs_env_action_count(const avs_env* env);

/* Starts an episode; writes observation_size doubles into obs. */
avs_status avs_env_reset(avs_env* env, uint64_t seed, double* obs);

/* Advances one decision step with the given action index. Writes the
 * next observation, the reward, and done (1 = episode over). */
avs_status avs_env_step(avs_env* env, int action, double* obs, double* reward,
                        int* done);

/* Bitmask of currently allowed actions (bit i = action i). */
avs_status avs_env_action_mask(const avs_env* env, uint64_t* mask);

const char* avs_env_last_error(const avs_env* env);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AVSTRESS_H */
