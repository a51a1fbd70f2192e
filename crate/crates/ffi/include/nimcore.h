#ifndef NIMCORE_H
#define NIMCORE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NimcoreStatus {
  NIMCORE_STATUS_OK = 0,
  NIMCORE_STATUS_NULL_POINTER = 1,
  NIMCORE_STATUS_INVALID_ARGUMENT = 2,
  NIMCORE_STATUS_INVALID_POSITION = 3,
  NIMCORE_STATUS_ILLEGAL_MOVE = 4,
  NIMCORE_STATUS_CONTRACT_VIOLATION = 5,
  NIMCORE_STATUS_RESOURCE_EXHAUSTED = 6,
  NIMCORE_STATUS_TERMINAL_POSITION = 7,
  NIMCORE_STATUS_ARITY_MISMATCH = 8,
  NIMCORE_STATUS_MALFORMED_CIRCUIT = 9,
  NIMCORE_STATUS_PARSE_ERROR = 10,
  NIMCORE_STATUS_INVALID_MODEL = 11,
  NIMCORE_STATUS_UNSUPPORTED_MODEL = 12,
  NIMCORE_STATUS_IO = 13,
  NIMCORE_STATUS_PANIC = 14,
} NimcoreStatus;

/**
 * Opaque circuit handle.
 */
typedef struct NimcoreCircuit NimcoreCircuit;

/**
 * A move as seen from C. `split` is non-zero only for Kayles row splits.
 */
typedef struct NimcoreMove {
  size_t heap_index;
  uint32_t new_count;
  uint32_t split;
} NimcoreMove;

typedef struct NimcoreMetrics {
  size_t depth;
  size_t size;
  size_t fan_in_max;
} NimcoreMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * success. Valid until the next call into the library on this thread.
 */
const char *nimcore_last_error(void);

/**
 * XOR of all heap sizes.
 *
 * # Safety
 * `heaps` points to `len` readable values; `out_value` is writable.
 */
enum NimcoreStatus nimcore_nim_sum(const uint32_t *heaps, size_t len, uint32_t *out_value);

/**
 * Nimber difference of two equal-length positions differing in at most
 * `k_max` heaps; more differences give `ContractViolation`.
 *
 * # Safety
 * `p1` and `p2` each point to `len` readable values; `out_value` is writable.
 */
enum NimcoreStatus nimcore_nimber_diff(const uint32_t *p1,
                                       const uint32_t *p2,
                                       size_t len,
                                       size_t k_max,
                                       uint32_t *out_value);

/**
 * Grundy value of a position under the named rules.
 *
 * # Safety
 * `rules_name` is a nul-terminated string; `heaps` points to `len` values.
 */
enum NimcoreStatus nimcore_grundy(const char *rules_name,
                                  const uint32_t *heaps,
                                  size_t len,
                                  uint32_t *out_value);

/**
 * The optimal-play agent's move (a move to nimber zero when one exists).
 *
 * # Safety
 * `rules_name` is a nul-terminated string; `heaps` points to `len` values;
 * `out_move` is writable.
 */
enum NimcoreStatus nimcore_oracle_move(const char *rules_name,
                                       const uint32_t *heaps,
                                       size_t len,
                                       struct NimcoreMove *out_move);

/**
 * Reply that undoes the opponent's nimber change between `before` and
 * `after` (NIM, one heap changed). `*out_found` is false when no single-heap
 * reply exists.
 *
 * # Safety
 * `before` and `after` each point to `len` values; outputs are writable.
 */
enum NimcoreStatus nimcore_preserving_reply(const uint32_t *before,
                                            const uint32_t *after,
                                            size_t len,
                                            struct NimcoreMove *out_move,
                                            bool *out_found);

/**
 * Parses the circuit text format.
 *
 * # Safety
 * `source` is a nul-terminated string; `out_circuit` is writable.
 */
enum NimcoreStatus nimcore_circuit_parse(const char *source, struct NimcoreCircuit **out_circuit);

/**
 * Builds the nimber-difference circuit over two `heaps`-heap positions of
 * `bits`-bit heaps. Outputs are the value bits, most significant first,
 * then the validity bit.
 *
 * # Safety
 * `out_circuit` is writable.
 */
enum NimcoreStatus nimcore_circuit_build_nimber_diff(size_t heaps,
                                                     uint32_t bits,
                                                     size_t k_max,
                                                     struct NimcoreCircuit **out_circuit);

/**
 * Builds the three-frame move-validator circuit.
 *
 * # Safety
 * `out_circuit` is writable.
 */
enum NimcoreStatus nimcore_circuit_build_validator(size_t heaps,
                                                   uint32_t bits,
                                                   size_t k_max,
                                                   struct NimcoreCircuit **out_circuit);

/**
 * Compiles a threshold-network JSON description.
 *
 * # Safety
 * `json` is a nul-terminated string; `out_circuit` is writable.
 */
enum NimcoreStatus nimcore_model_compile(const char *json, struct NimcoreCircuit **out_circuit);

/**
 * Number of input bits the circuit expects.
 *
 * # Safety
 * `handle` is a live circuit handle; `out_value` is writable.
 */
enum NimcoreStatus nimcore_circuit_input_arity(const struct NimcoreCircuit *handle,
                                               size_t *out_value);

/**
 * Number of output bits.
 *
 * # Safety
 * `handle` is a live circuit handle; `out_value` is writable.
 */
enum NimcoreStatus nimcore_circuit_output_count(const struct NimcoreCircuit *handle,
                                                size_t *out_value);

/**
 * Evaluates on one input vector of 0/1 bytes. `outputs_len` must equal the
 * output count.
 *
 * # Safety
 * `inputs` points to `inputs_len` bytes; `outputs` to `outputs_len`
 * writable bytes.
 */
enum NimcoreStatus nimcore_circuit_evaluate(const struct NimcoreCircuit *handle,
                                            const uint8_t *inputs,
                                            size_t inputs_len,
                                            uint8_t *outputs,
                                            size_t outputs_len);

/**
 * # Safety
 * `handle` is a live circuit handle; `out_metrics` is writable.
 */
enum NimcoreStatus nimcore_circuit_metrics(const struct NimcoreCircuit *handle,
                                           struct NimcoreMetrics *out_metrics);

/**
 * Serializes to the text format. Free the string with
 * [`nimcore_string_free`].
 *
 * # Safety
 * `handle` is a live circuit handle; `out_text` is writable.
 */
enum NimcoreStatus nimcore_circuit_to_text(const struct NimcoreCircuit *handle, char **out_text);

/**
 * Releases a circuit handle. Null is ignored.
 *
 * # Safety
 * `handle` is null or a circuit from this library not yet freed.
 */
void nimcore_circuit_free(struct NimcoreCircuit *handle);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or a string from this library not yet freed.
 */
void nimcore_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NIMCORE_H */
