#ifndef TORUS_GREEN_H
#define TORUS_GREEN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_POINTER = 1,
  TG_STATUS_DOMAIN = 2,
  TG_STATUS_POLE = 3,
  TG_STATUS_TWO_TORSION = 4,
  TG_STATUS_NO_CONVERGENCE = 5,
  TG_STATUS_BRANCH = 6,
  TG_STATUS_DEGENERATE = 7,
  TG_STATUS_INCONSISTENT = 8,
  TG_STATUS_BUFFER_TOO_SMALL = 9,
  TG_STATUS_PANIC = 10,
} TgStatus;

/**
 * Opaque lattice handle.
 */
typedef struct TgLattice TgLattice;

typedef struct TgComplex {
  double re;
  double im;
} TgComplex;

typedef struct TgConstants {
  struct TgComplex tau;
  struct TgComplex nome;
  struct TgComplex eta1;
  struct TgComplex eta2;
  struct TgComplex e1;
  struct TgComplex e2;
  struct TgComplex e3;
  struct TgComplex g2;
  struct TgComplex g3;
} TgConstants;

typedef struct TgCriticalPoint {
  struct TgComplex z;
  /**
   * z = r + sτ with r, s in [0, 1)
   */
  double r;
  double s;
  /**
   * 1 for points off the half-periods
   */
  int32_t nontrivial;
  /**
   * Hessian determinant
   */
  double det;
  /**
   * +1, −1, or 0 when degenerate
   */
  int32_t local_degree;
  double residual;
} TgCriticalPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never null.
 */
const char *tg_status_message(enum TgStatus status);

/**
 * Details of the last failure on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *tg_last_error_message(void);

/**
 * Builds the lattice Z + Zτ. Requires Im τ ≥ 0.05.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TgStatus tg_lattice_new(struct TgComplex tau, struct TgLattice **out);

/**
 * # Safety
 * `lat` must come from `tg_lattice_new` and not be freed twice. Null is ignored.
 */
void tg_lattice_free(struct TgLattice *lat);

/**
 * # Safety
 * `lat` must be a live handle; `out` must be valid for writes.
 */
enum TgStatus tg_lattice_constants(const struct TgLattice *lat, struct TgConstants *out);

/**
 * ℘(z).
 *
 * # Safety
 * `lat` must be a live handle; `out` must be valid for writes.
 */
enum TgStatus tg_wp(const struct TgLattice *lat, struct TgComplex z, struct TgComplex *out);

/**
 * ℘'(z).
 *
 * # Safety
 * As `tg_wp`.
 */
enum TgStatus tg_wp_prime(const struct TgLattice *lat, struct TgComplex z, struct TgComplex *out);

/**
 * ζ(z).
 *
 * # Safety
 * As `tg_wp`.
 */
enum TgStatus tg_zeta(const struct TgLattice *lat, struct TgComplex z, struct TgComplex *out);

/**
 * σ(z). May overflow to infinity far from the origin.
 *
 * # Safety
 * As `tg_wp`.
 */
enum TgStatus tg_sigma(const struct TgLattice *lat, struct TgComplex z, struct TgComplex *out);

/**
 * Critical points of the Green function G.
 *
 * `*count` receives the number of points. If it exceeds `cap`, nothing
 * is written to `buf` and `TG_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `lat` must be a live handle; `buf` must hold `cap` elements; `count` must be valid for writes.
 */
enum TgStatus tg_critical_points_g(const struct TgLattice *lat,
                                   struct TgCriticalPoint *buf,
                                   size_t cap,
                                   size_t *count);

/**
 * Critical points of G_p(z) = (G(z − p) + G(z + p))/2. At most 10.
 *
 * # Safety
 * As `tg_critical_points_g`.
 */
enum TgStatus tg_critical_points_gp(const struct TgLattice *lat,
                                    struct TgComplex p,
                                    struct TgCriticalPoint *buf,
                                    size_t cap,
                                    size_t *count);

/**
 * Hitchin's map at q = r + sτ. `*in_u` is 0 when the value is infinite
 * or equals some e_k.
 *
 * # Safety
 * `lat` must be a live handle; `out` and `in_u` must be valid for writes.
 */
enum TgStatus tg_hitchin_f(const struct TgLattice *lat,
                           double r,
                           double s,
                           struct TgComplex *out,
                           int32_t *in_u);

/**
 * One solution p of ℘(p) = c; the other is −p.
 *
 * # Safety
 * `lat` must be a live handle; `out` must be valid for writes.
 */
enum TgStatus tg_wp_inverse(const struct TgLattice *lat, struct TgComplex c, struct TgComplex *out);

/**
 * Hessian signs of G_p at the four half-periods, from ℘(p) alone, and the
 * number m of positive signs.
 *
 * # Safety
 * `lat` must be a live handle; `signs` must hold 4 elements; `m` must be valid for writes.
 */
enum TgStatus tg_classify_region(const struct TgLattice *lat,
                                 struct TgComplex wp_p,
                                 int8_t *signs,
                                 uint32_t *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORUS_GREEN_H */
