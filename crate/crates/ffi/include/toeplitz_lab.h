#ifndef TOEPLITZ_LAB_H
#define TOEPLITZ_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_CONFIG = 2,
  TL_STATUS_INVARIANT_VIOLATION = 3,
  TL_STATUS_DEPTH_EXHAUSTED = 4,
  TL_STATUS_BUDGET_EXHAUSTED = 5,
  TL_STATUS_IO = 6,
  TL_STATUS_PANIC = 7,
} TlStatus;

/**
 * Opaque deck handle.
 */
typedef struct TlDeck TlDeck;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a bundled deck by name ("williams-m2", "z2-m2", ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TlStatus tl_deck_load_bundled(const char *name, struct TlDeck **out);

/**
 * Loads a deck from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TlStatus tl_deck_load_file(const char *path, struct TlDeck **out);

/**
 * # Safety
 * `deck` must come from a `tl_deck_load_*` call and not be freed twice. Null is ignored.
 */
void tl_deck_free(struct TlDeck *deck);

/**
 * Lattice rank r and order of the finite part.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TlStatus tl_deck_shape(const struct TlDeck *deck, size_t *rank, size_t *finite_order);

/**
 * η at (v, f): symbol and defining level.
 *
 * # Safety
 * `v` must point to `len` integers; out pointers must be valid.
 */
enum TlStatus tl_eta_value(const struct TlDeck *deck,
                           const int64_t *v,
                           size_t len,
                           size_t f,
                           uint8_t *out_symbol,
                           uint32_t *out_level);

/**
 * Frequencies of η over D_nR as fractions, in alphabet order. `out_len` receives the alphabet
 * size; nothing is written past `cap`.
 *
 * # Safety
 * The three arrays must hold `cap` entries; `out_len` must be valid.
 */
enum TlStatus tl_mu_n_freq(const struct TlDeck *deck,
                           size_t n,
                           uint8_t *symbols,
                           int64_t *numerators,
                           int64_t *denominators,
                           size_t cap,
                           size_t *out_len);

/**
 * Whether the counted d_{n+1} equals the product formula.
 *
 * # Safety
 * `out_equal` must be valid.
 */
enum TlStatus tl_d_product_check(const struct TlDeck *deck, size_t n, bool *out_equal);

/**
 * Runs every suite and returns the verdict document as JSON. Release it with `tl_string_free`.
 * Returns `TL_STATUS_INVARIANT_VIOLATION` (with the document still written) when a hard check fails.
 *
 * # Safety
 * `out_json` must be valid.
 */
enum TlStatus tl_verify_all_json(const struct TlDeck *deck,
                                 char **out_json);

/**
 * # Safety
 * `s` must come from this library. Null is ignored.
 */
void tl_string_free(char *s);

/**
 * Message of the last failure on this thread, or null. Valid until the next failing call.
 */
const char *tl_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOEPLITZ_LAB_H */
