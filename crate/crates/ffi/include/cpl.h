#ifndef CPL_H
#define CPL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CplStatus {
  CPL_STATUS_OK = 0,
  CPL_STATUS_NULL_ARGUMENT = 1,
  CPL_STATUS_INVALID_UTF8 = 2,
  CPL_STATUS_PARSE_ERROR = 3,
  CPL_STATUS_INCONSISTENT = 4,
  CPL_STATUS_HIERARCHY = 5,
  CPL_STATUS_IO = 6,
  CPL_STATUS_MEMORY = 7,
  CPL_STATUS_PANIC = 8,
} CplStatus;

/**
 * A feature-vote memory store.
 */
typedef struct CplMemory CplMemory;

/**
 * A parsed scene.
 */
typedef struct CplScene CplScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into the library.
 */
const char *cpl_last_error(void);

/**
 * Library version, static storage.
 */
const char *cpl_version(void);

/**
 * # Safety
 * `s` is null or came from this library and has not been freed.
 */
void cpl_string_free(char *s);

/**
 * Parse scene source. On success `*out` owns a new scene.
 *
 * # Safety
 * `source` is a nul-terminated string; `out` is writable.
 */
enum CplStatus cpl_scene_parse(const char *source, struct CplScene **out);

/**
 * # Safety
 * `scene` is null or a live handle from [`cpl_scene_parse`].
 */
void cpl_scene_free(struct CplScene *scene);

/**
 * Diagnostics as a JSON array. Returns `Inconsistent` when any is an
 * error; `*out_json` is filled either way.
 *
 * # Safety
 * `scene` is a live handle; `out_json` is writable.
 */
enum CplStatus cpl_scene_check(const struct CplScene *scene, char **out_json);

/**
 * Canonical source text.
 *
 * # Safety
 * `scene` is a live handle; `out` is writable.
 */
enum CplStatus cpl_scene_format(const struct CplScene *scene, char **out);

/**
 * Frequency grid as CSV.
 *
 * # Safety
 * `scene` is a live handle; `out` is writable.
 */
enum CplStatus cpl_scene_grid_csv(const struct CplScene *scene, char **out);

/**
 * Grid, clusters and secondary links as JSON.
 *
 * # Safety
 * `scene` is a live handle; `out` is writable.
 */
enum CplStatus cpl_scene_clusters_json(const struct CplScene *scene, char **out);

/**
 * Nested object set, children in placement order or by name.
 *
 * # Safety
 * `scene` is a live handle; `out` is writable.
 */
enum CplStatus cpl_scene_nested(const struct CplScene *scene, bool sorted, char **out);

/**
 * Uni-directional links and process cycles as JSON.
 *
 * # Safety
 * `scene` is a live handle; `out` is writable.
 */
enum CplStatus cpl_scene_cycles_json(const struct CplScene *scene, char **out);

/**
 * Hierarchy nodes, edges and construction trace as JSON.
 *
 * # Safety
 * `scene` is a live handle; `out` is writable.
 */
enum CplStatus cpl_scene_hierarchy_json(const struct CplScene *scene, char **out);

/**
 * An empty store.
 */
struct CplMemory *cpl_memory_new(void);

/**
 * Load every `*.json` entry in a directory.
 *
 * # Safety
 * `dir` is a nul-terminated path; `out` is writable.
 */
enum CplStatus cpl_memory_load(const char *dir, struct CplMemory **out);

/**
 * # Safety
 * `memory` is null or a live handle.
 */
void cpl_memory_free(struct CplMemory *memory);

/**
 * Number of stored entries; zero for a null handle.
 *
 * # Safety
 * `memory` is null or a live handle.
 */
size_t cpl_memory_len(const struct CplMemory *memory);

/**
 * Store an entry; `features` is comma-separated.
 *
 * # Safety
 * `memory` is a live handle; strings are nul-terminated.
 */
enum CplStatus cpl_memory_store(struct CplMemory *memory, const char *id, const char *features);

/**
 * Store the concepts a scene's rules use under `id`.
 *
 * # Safety
 * `memory` and `scene` are live handles; `id` is nul-terminated.
 */
enum CplStatus cpl_memory_store_scene(struct CplMemory *memory,
                                      const char *id,
                                      const struct CplScene *scene);

/**
 * Ranked predictions as JSON. `legal` may be null for no filter; lists
 * are comma-separated; `k` must be at least 1.
 *
 * # Safety
 * `memory` is a live handle; non-null strings are nul-terminated; `out`
 * is writable.
 */
enum CplStatus cpl_memory_predict(const struct CplMemory *memory,
                                  const char *input,
                                  const char *legal,
                                  size_t k,
                                  char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPL_H */
