#ifndef LOOPSOUP_H
#define LOOPSOUP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_OUT_OF_RANGE = 3,
  /*
   A series or integrator failed to reach its tolerance.
   */
  LS_STATUS_NUMERICAL = 4,
  LS_STATUS_IO = 5,
  LS_STATUS_PARSE = 6,
  /*
   The caller's buffer is too small; the required length was written.
   */
  LS_STATUS_BUFFER_TOO_SMALL = 7,
  LS_STATUS_PANIC = 8,
} LsStatus;

/*
 Connected components of the loops applied so far.
 */
typedef struct LsClusterState LsClusterState;

/*
 A sampled or loaded loop soup.
 */
typedef struct LsSoup LsSoup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/*
 Copies the calling thread's last error message (NUL-terminated, truncated
 to `cap`) into `buf` and returns the full message length without the NUL.

 # Safety
 `buf` must be null or valid for `cap` bytes.
 */
size_t ls_last_error_message(char *buf, size_t cap);

/*
 Samples a soup on `[0, horizon]` from stream `stream` of `seed`.

 # Safety
 `out_soup` must be valid for writes. The handle must be released with [`ls_soup_free`].
 */
LsStatus ls_soup_sample(uint32_t n,
                        double eps,
                        double horizon,
                        uint64_t seed,
                        uint64_t stream,
                        LsSoup **out_soup);

/*
 Reads a soup file written by [`ls_soup_write`] or the command-line tool.

 # Safety
 `path` must be a NUL-terminated string and `out_soup` valid for writes.
 */
LsStatus ls_soup_read(const char *path, LsSoup **out_soup);

/*
 # Safety
 `soup` must be a live handle and `path` a NUL-terminated string.
 */
LsStatus ls_soup_write(const LsSoup *soup, const char *path);

/*
 Releases a soup; null is ignored.

 # Safety
 `soup` must be null or a handle not yet freed.
 */
void ls_soup_free(LsSoup *soup);

/*
 Number of loops in the soup.

 # Safety
 `soup` must be a live handle and `out_len` valid for writes.
 */
LsStatus ls_soup_len(const LsSoup *soup, size_t *out_len);

/*
 Loop `index` (in time order): its arrival time and vertices.

 Writes the loop length to `out_len`. When `cap` is smaller than the
 length nothing is copied and [`LsStatus::BufferTooSmall`] is returned.

 # Safety
 `vertices` must be valid for `cap` writes; other pointers valid for one write.
 */
LsStatus ls_soup_loop(const LsSoup *soup,
                      size_t index,
                      double *out_time,
                      uint32_t *vertices,
                      size_t cap,
                      size_t *out_len);

/*
 Size of the component of `x` at soup time `t`, found by exploration.

 # Safety
 `soup` must be a live handle and `out_size` valid for writes.
 */
LsStatus ls_soup_explore(const LsSoup *soup, double t, uint32_t x, uint64_t *out_size);

/*
 All singletons on `n` vertices.

 # Safety
 `out_state` must be valid for writes; release with [`ls_cluster_free`].
 */
LsStatus ls_cluster_new(uint32_t n, LsClusterState **out_state);

/*
 Components formed by the loops of `soup` arrived by time `t`.

 # Safety
 `soup` must be a live handle and `out_state` valid for writes.
 */
LsStatus ls_cluster_from_soup(const LsSoup *soup, double t, LsClusterState **out_state);

/*
 Merges the components of the `len` given vertices (1-based).

 # Safety
 `state` must be a live handle and `vertices` valid for `len` reads.
 */
LsStatus ls_cluster_apply_loop(LsClusterState *state,
                               const uint32_t *vertices,
                               size_t len,
                               double time);

/*
 # Safety
 `state` must be a live handle and `out_size` valid for writes.
 */
LsStatus ls_cluster_component_size(LsClusterState *state, uint32_t v, uint32_t *out_size);

/*
 The two largest component sizes and the number of components.

 # Safety
 `state` must be a live handle; out-pointers valid for writes.
 */
LsStatus ls_cluster_summary(const LsClusterState *state,
                            uint32_t *out_largest,
                            uint32_t *out_second,
                            uint32_t *out_components);

/*
 # Safety
 `state` must be null or a handle not yet freed.
 */
void ls_cluster_free(LsClusterState *state);

/*
 `P(T = k)` for the total progeny with `u` ancestors of the limiting law at `(eps, t)`.

 # Safety
 `out_p` must be valid for writes.
 */
LsStatus ls_progeny_pmf(uint32_t u, double eps, double t, uint64_t k, double *out_p);

/*
 Extinction probability of the limiting offspring law.

 # Safety
 `out_q` must be valid for writes.
 */
LsStatus ls_extinction_prob(double eps, double t, double *out_q);

/*
 Cramér rate `h(t)` (subcritical scale of the largest component).

 # Safety
 `out_h` must be valid for writes.
 */
LsStatus ls_cramer_h(double eps, double t, double *out_h);

/*
 Tail rate `I_t` (supercritical second-component scale).

 # Safety
 `out_i` must be valid for writes.
 */
LsStatus ls_tail_rate_i(double eps, double t, double *out_i);

/*
 Probability that the soup partition at time `t` is finer than a
 partition with the given block sizes.

 # Safety
 `blocks` must be valid for `nblocks` reads and `out_p` for a write.
 */
LsStatus ls_semigroup_prob(uint32_t n,
                           double eps,
                           double t,
                           const uint32_t *blocks,
                           size_t nblocks,
                           double *out_p);

/*
 Analytic cluster density `ρ_{ε,t}(k)`.

 # Safety
 `out_rho` must be valid for writes.
 */
LsStatus ls_analytic_rho(double eps, double t, uint64_t k, double *out_rho);

/*
 Analytic cluster density of the fixed-length-`j` system.

 # Safety
 `out_rho` must be valid for writes.
 */
LsStatus ls_analytic_rho_fixed_j(uint32_t j, double t, uint64_t k, double *out_rho);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOOPSOUP_H */
