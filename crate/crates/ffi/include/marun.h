#ifndef MARUN_H
#define MARUN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Length of a state hash including the terminating NUL.
 */
#define MARUN_HASH_BUFFER_LEN 65

/**
 * Result of every call.
 */
typedef enum MarunStatus {
  MARUN_STATUS_OK = 0,
  MARUN_STATUS_NULL_POINTER = 1,
  MARUN_STATUS_INVALID_UTF8 = 2,
  MARUN_STATUS_INVALID_ARGUMENT = 3,
  MARUN_STATUS_CONFIG = 4,
  MARUN_STATUS_COMMAND = 5,
  MARUN_STATUS_PHYSICS = 6,
  MARUN_STATUS_SCENARIO = 7,
  MARUN_STATUS_BUFFER_TOO_SMALL = 8,
  MARUN_STATUS_PANIC = 9,
} MarunStatus;

/**
 * Opaque simulation handle.
 */
typedef struct MarunSim MarunSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *marun_last_error(void);

/**
 * Robot alone in open water.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum MarunStatus marun_sim_new_default(double dt, struct MarunSim **out);

/**
 * Robot plus the bodies of a scene document.
 *
 * # Safety
 * `scene_json` must be a NUL-terminated string; `out` must be writable.
 */
enum MarunStatus marun_sim_new_from_scene_json(const char *scene_json,
                                               double dt,
                                               struct MarunSim **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from a `marun_sim_new_*` call and not be used afterwards.
 */
void marun_sim_free(struct MarunSim *sim);

/**
 * Applies a command message (JSON) to a command topic, taking effect at
 * the next step.
 *
 * # Safety
 * `sim` must be a live handle; `topic` and `msg_json` NUL-terminated strings.
 */
enum MarunStatus marun_sim_publish(struct MarunSim *sim, const char *topic, const char *msg_json);

/**
 * Advances `steps` fixed steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum MarunStatus marun_sim_step(struct MarunSim *sim, uint32_t steps);

/**
 * Simulation time, s.
 *
 * # Safety
 * `sim` must be a live handle; `out` writable.
 */
enum MarunStatus marun_sim_time(const struct MarunSim *sim, double *out);

/**
 * Steps taken so far.
 *
 * # Safety
 * `sim` must be a live handle; `out` writable.
 */
enum MarunStatus marun_sim_step_index(const struct MarunSim *sim, uint64_t *out);

/**
 * Writes the 64-character hex state hash and a NUL into `buf`, which must
 * hold at least `MARUN_HASH_BUFFER_LEN` bytes.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must be writable for `len` bytes.
 */
enum MarunStatus marun_sim_state_hash(const struct MarunSim *sim, char *buf, uintptr_t len);

/**
 * World-frame (x, y, z) origins of a limb's segments, proximal first,
 * written to `xyz` (3 doubles per segment). `count` receives the segment
 * count; if `capacity` (in doubles) is too small nothing else is written.
 *
 * # Safety
 * `sim` must be a live handle; `xyz` writable for `capacity` doubles;
 * `count` writable.
 */
enum MarunStatus marun_sim_limb_segments(const struct MarunSim *sim,
                                         uint32_t limb,
                                         double *xyz,
                                         uintptr_t capacity,
                                         uintptr_t *count);

/**
 * Estimated contact force at a limb tip, world frame, N.
 *
 * # Safety
 * `sim` must be a live handle; `xyz` writable for 3 doubles.
 */
enum MarunStatus marun_sim_tip_force(const struct MarunSim *sim, uint32_t limb, double *xyz);

/**
 * Runs a scenario headless with a scripted command stream (JSON lines of
 * `{step, topic, msg}`) and returns the metrics record as JSON in
 * `metrics_json`, to be released with `marun_string_free`.
 *
 * # Safety
 * The three inputs must be NUL-terminated strings; `metrics_json` writable.
 */
enum MarunStatus marun_run_scenario_json(const char *scenario_json,
                                         const char *scene_json,
                                         const char *script_jsonl,
                                         double dt,
                                         char **metrics_json);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void marun_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARUN_H */
