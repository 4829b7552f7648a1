#ifndef TGRAPH_H
#define TGRAPH_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of fallible calls.
 */
typedef enum TgraphStatus {
  TGRAPH_STATUS_OK = 0,
  TGRAPH_STATUS_NULL_POINTER = 1,
  TGRAPH_STATUS_PARSE = 2,
  TGRAPH_STATUS_INVALID_EDGE = 3,
  TGRAPH_STATUS_INVALID_ARGUMENT = 4,
  TGRAPH_STATUS_DECOMPOSE = 5,
  TGRAPH_STATUS_INTERNAL = 6,
} TgraphStatus;

/**
 * Outcome of an isomorphism test. Values match the CLI exit codes.
 */
typedef enum TgraphVerdict {
  TGRAPH_VERDICT_ISOMORPHIC = 0,
  TGRAPH_VERDICT_NOT_ISOMORPHIC = 1,
  TGRAPH_VERDICT_NOT_T_GRAPH = 2,
} TgraphVerdict;

/**
 * Opaque graph handle.
 */
typedef struct TgraphGraph TgraphGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * New edgeless graph on `n` vertices. Never returns null.
 */
struct TgraphGraph *tgraph_graph_new(size_t n);

/**
 * Parses the text format (`n m` header, then `u v` lines) into `*out`.
 *
 * # Safety
 * `text` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum TgraphStatus tgraph_graph_parse(const char *text, struct TgraphGraph **out);

/**
 * Adds the edge `u v`. Adding an existing edge is a no-op.
 *
 * # Safety
 * `g` must be a live handle.
 */
enum TgraphStatus tgraph_graph_add_edge(struct TgraphGraph *g, size_t u, size_t v);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t tgraph_graph_vertex_count(const struct TgraphGraph *g);

/**
 * Edge count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t tgraph_graph_edge_count(const struct TgraphGraph *g);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void tgraph_graph_free(struct TgraphGraph *g);

/**
 * Decides isomorphism, trying leaf counts `2..=d_max`.
 *
 * On success `*verdict` is set, `*d_used` (if non-null) receives the leaf
 * count that settled the question, and for an isomorphic pair `witness`
 * (if non-null, with room for `n` entries) receives the vertex map. For a
 * not-a-T-graph verdict the evidence is in [`tgraph_last_error_message`].
 *
 * # Safety
 * `g1`, `g2` must be live handles, `verdict` valid, `witness` null or
 * writable for `tgraph_graph_vertex_count(g1)` entries.
 */
enum TgraphStatus tgraph_is_isomorphic(const struct TgraphGraph *g1,
                                       const struct TgraphGraph *g2,
                                       size_t d_max,
                                       enum TgraphVerdict *verdict,
                                       size_t *witness,
                                       size_t *d_used);

/**
 * Canonical decomposition as a JSON string in `*out`; free it with
 * [`tgraph_string_free`].
 *
 * # Safety
 * `g` must be a live handle and `out` a valid pointer.
 */
enum TgraphStatus tgraph_decompose_json(const struct TgraphGraph *g, size_t d, char **out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void tgraph_string_free(char *s);

/**
 * Message of the last failed call on this thread; empty after success
 * other than a not-a-T-graph verdict.
 * Valid until the next call on the same thread.
 */
const char *tgraph_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TGRAPH_H */
