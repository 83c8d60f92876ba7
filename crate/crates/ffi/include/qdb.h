#ifndef QDB_H
#define QDB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QdbStatus {
  QDB_STATUS_OK = 0,
  QDB_STATUS_NULL_ARGUMENT = 1,
  QDB_STATUS_INVALID_UTF8 = 2,
  QDB_STATUS_COMPILE_ERROR = 3,
  QDB_STATUS_RUNTIME_ERROR = 4,
  QDB_STATUS_INVALID_ARGUMENT = 5,
  QDB_STATUS_PANIC = 6,
} QdbStatus;

typedef enum QdbEngine {
  QDB_ENGINE_DENSE = 0,
  QDB_ENGINE_NAIVE = 1,
} QdbEngine;

typedef enum QdbMode {
  QDB_MODE_OMNISCIENT = 0,
  QDB_MODE_DEVICE = 1,
} QdbMode;

/**
 * One session-protocol connection driven frame by frame.
 */
typedef struct QdbHandler QdbHandler;

/**
 * A compiled program.
 */
typedef struct QdbProgram QdbProgram;

/**
 * A debug session over one program.
 */
typedef struct QdbSession QdbSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qdb_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *qdb_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qdb_string_free(char *s);

/**
 * Compiles OpenQASM 2.0 `source` into `*out`.
 *
 * # Safety
 * `source` must be NUL-terminated; `out` must be writable.
 */
enum QdbStatus qdb_program_compile(const char *source, struct QdbProgram **out);

/**
 * # Safety
 * `program` must come from [`qdb_program_compile`] or be NULL.
 */
void qdb_program_free(struct QdbProgram *program);

/**
 * Number of qubits, or 0 for NULL.
 *
 * # Safety
 * `program` must be a live handle or NULL.
 */
size_t qdb_program_qubits(const struct QdbProgram *program);

/**
 * Runs `shots` shots and writes the run result as JSON to `*out_json`.
 *
 * # Safety
 * `program` must be a live handle; `out_json` must be writable.
 */
enum QdbStatus qdb_program_run(const struct QdbProgram *program,
                               enum QdbEngine engine,
                               uint64_t seed,
                               uint64_t shots,
                               char **out_json);

/**
 * Opens a debug session on a copy of `program`.
 *
 * # Safety
 * `program` must be a live handle; `out` must be writable.
 */
enum QdbStatus qdb_session_new(const struct QdbProgram *program,
                               enum QdbMode mode,
                               uint64_t seed,
                               uint64_t shot_budget,
                               struct QdbSession **out);

/**
 * # Safety
 * `session` must come from [`qdb_session_new`] or be NULL.
 */
void qdb_session_free(struct QdbSession *session);

/**
 * Executes one instruction; the stop record is written as JSON.
 *
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
enum QdbStatus qdb_session_step(struct QdbSession *session, char **out_json);

/**
 * Runs to the next breakpoint or the end.
 *
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
enum QdbStatus qdb_session_continue(struct QdbSession *session, char **out_json);

/**
 * Amplitudes in omniscient mode, a sampled histogram in device mode.
 *
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
enum QdbStatus qdb_session_inspect(struct QdbSession *session, char **out_json);

/**
 * Per-qubit purities and entanglement flags. Omniscient mode only reports
 * exact values; device mode estimates them by tomography.
 *
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
enum QdbStatus qdb_session_separability(struct QdbSession *session, char **out_json);

/**
 * # Safety
 * `session` must be a live handle.
 */
enum QdbStatus qdb_session_set_mode(struct QdbSession *session, enum QdbMode mode);

/**
 * Instruction index of the next instruction to execute.
 *
 * # Safety
 * `session` must be a live handle or NULL.
 */
size_t qdb_session_position(const struct QdbSession *session);

/**
 * Shots needed to estimate a probability within `epsilon` with confidence
 * `1 - delta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QdbStatus qdb_chernoff_shots(double epsilon, double delta, uint64_t *out);

/**
 * Checks that the decimal `factors` multiply to `n`, each strictly
 * between 1 and `n`.
 *
 * # Safety
 * `n` and each of the `count` entries of `factors` must be NUL-terminated;
 * `out_valid` must be writable.
 */
enum QdbStatus qdb_validate_factors(const char *n,
                                    const char *const *factors,
                                    size_t count,
                                    bool *out_valid);

/**
 * A fresh protocol handler in the `created` state.
 */
struct QdbHandler *qdb_handler_new(void);

/**
 * # Safety
 * `handler` must come from [`qdb_handler_new`] or be NULL.
 */
void qdb_handler_free(struct QdbHandler *handler);

/**
 * Handles one request frame. Every emitted frame, events first and the
 * reply last, is written newline-separated to `*out_frames`.
 *
 * # Safety
 * `handler` must be a live handle, `line` NUL-terminated and `out_frames`
 * writable.
 */
enum QdbStatus qdb_handler_request(struct QdbHandler *handler, const char *line, char **out_frames);

/**
 * Whether the handler has processed a `close` request.
 *
 * # Safety
 * `handler` must be a live handle or NULL.
 */
bool qdb_handler_is_closed(const struct QdbHandler *handler);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDB_H */
