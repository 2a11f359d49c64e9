/* C interface for the sph streaming persistent homology engine.
 *
 * Conventions:
 *   - Every function returns SphStatus; out-parameters are written only on
 *     SPH_STATUS_OK.
 *   - sph_last_error_message() describes the most recent failure on the
 *     calling thread; the pointer stays valid until the next failing call
 *     on that thread.
 *   - SphSession is opaque; release handles with sph_session_free().
 *   - Array results use a two-call pattern: pass a NULL buffer to receive
 *     the required capacity in *written, then call again with storage.
 */

#ifndef SPH_H
#define SPH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum SphStatus {
  SPH_STATUS_OK = 0,
  SPH_STATUS_NULL_ARGUMENT = 1,
  SPH_STATUS_INVALID_ARGUMENT = 2,
  SPH_STATUS_INPUT_ERROR = 3,
  SPH_STATUS_IO_ERROR = 4,
  SPH_STATUS_CONTRACT_VIOLATION = 5,
  SPH_STATUS_CHECKPOINT_MISMATCH = 6,
  SPH_STATUS_FINALIZED = 7,
} SphStatus;

typedef enum SphRunOutcome {
  SPH_RUN_END_OF_STREAM = 0,
  SPH_RUN_STOPPED_AT_EPSILON = 1,
  SPH_RUN_EDGE_BUDGET_EXHAUSTED = 2,
} SphRunOutcome;

/* One persistence interval; death is IEEE +inf for open classes. */
typedef struct SphInterval {
  uint32_t dimension;
  double birth;
  double death;
} SphInterval;

typedef struct SphSession SphSession;

/* Library version as a static string. */
const char *sph_version(void);

/* Most recent failure message on this thread. */
const char *sph_last_error_message(void);

/* Metric codes for sph_compute_edges. */
#define SPH_METRIC_EUCLIDEAN 0u
#define SPH_METRIC_MANHATTAN 1u

/* Builds the sorted edge file for n points of dimension dim stored
 * row-major in coords. Pairs farther apart than max_epsilon are omitted. */
SphStatus sph_compute_edges(const double *coords, size_t n, size_t dim,
                            uint32_t metric, double max_epsilon,
                            const char *edges_path, size_t memory_budget);

/* Starts a fresh session over a sorted edge file; writes interval records
 * to intervals_path as classes close. max_dim caps simplex dimension. */
SphStatus sph_session_start(const char *edges_path, uint32_t n,
                            uint32_t max_dim, const char *intervals_path,
                            SphSession **out);

/* Restores a checkpointed session. The interval file is truncated back to
 * the checkpoint's closed count, so the resumed run extends it in place. */
SphStatus sph_session_resume(const char *checkpoint_path,
                             const char *edges_path,
                             const char *intervals_path, SphSession **out);

/* Processes edges until the stream ends, the next edge is longer than
 * stop_epsilon, or max_edges (0 = unlimited) are consumed. outcome may be
 * NULL. */
SphStatus sph_session_run(SphSession *session, double stop_epsilon,
                          uint64_t max_edges, SphRunOutcome *outcome);

/* Edges processed so far. */
SphStatus sph_session_edges_processed(SphSession *session, uint64_t *out);

/* Closed intervals so far (spilled to disk, not held in memory). */
SphStatus sph_session_closed_count(SphSession *session, uint64_t *out);

/* Open-class counts for dimensions 0 .. max_dim-1; len must equal max_dim. */
SphStatus sph_session_betti(SphSession *session, uint64_t *betti, size_t len);

/* Currently open intervals (two-call pattern). */
SphStatus sph_session_open_intervals(SphSession *session, SphInterval *buffer,
                                     size_t cap, size_t *written);

/* Writes a checkpoint of the current state to path. */
SphStatus sph_session_checkpoint(SphSession *session, const char *path);

/* Appends open intervals to the interval file and backfills its header.
 * The session stays readable but cannot run or finalize again. */
SphStatus sph_session_finalize(SphSession *session);

/* Releases a session handle; NULL is a no-op. */
void sph_session_free(SphSession *session);

/* Reads a finalized interval file (two-call pattern). */
SphStatus sph_intervals_read(const char *path, SphInterval *buffer, size_t cap,
                             size_t *written);

#ifdef __cplusplus
}
#endif

#endif /* SPH_H */
