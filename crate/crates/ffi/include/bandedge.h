#ifndef BANDEDGE_H
#define BANDEDGE_H

/* Generated by cbindgen from bandedge-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum BandedgeStatus {
  BandedgeStatus_Ok = 0,
  BandedgeStatus_NullPointer = 1,
  BandedgeStatus_InvalidArgument = 2,
  /**
   * Spectral parameter inside the band, or another domain violation.
   */
  BandedgeStatus_Domain = 3,
  /**
   * Quadrature, eigensolver or root-finder failure.
   */
  BandedgeStatus_Numerical = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  BandedgeStatus_Panic = 5,
} BandedgeStatus;

/**
 * Hermitian hopping-coefficient table (opaque).
 */
typedef struct BandedgeDispersion BandedgeDispersion;

/**
 * Green-function evaluator with certified band extrema (opaque).
 */
typedef struct BandedgeEvaluator BandedgeEvaluator;

/**
 * Finite real on-site potential (opaque).
 */
typedef struct BandedgePotential BandedgePotential;

/**
 * Certified band extrema in flat form.
 */
typedef struct BandedgeExtrema {
  double p_min[2];
  double p_max[2];
  double e_min;
  double e_max;
  bool nondegenerate;
  bool unique;
} BandedgeExtrema;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *bandedge_version(void);

/**
 * Most recent error message on this thread, or NULL. The caller owns the
 * returned string and must release it with `bandedge_string_free`.
 */
char *bandedge_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer previously returned by
 * `bandedge_last_error_message`, not yet freed.
 */
void bandedge_string_free(char *s);

/**
 * Discrete-Laplacian preset dispersion for dim 1 or 2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BandedgeStatus bandedge_dispersion_laplacian(uint32_t dim, struct BandedgeDispersion **out);

/**
 * Dispersion from an explicit coefficient list; the Hermitian closure
 * (filling each missing -x with the conjugate) is applied and verified.
 * `sites` holds n pairs (x1, x2); the second coordinate is ignored for
 * dim = 1.
 *
 * # Safety
 * `sites` must point to 2n i64 values, `re`/`im` to n doubles each, and
 * `out` must be valid.
 */
enum BandedgeStatus bandedge_dispersion_new(uint32_t dim,
                                            size_t n,
                                            const int64_t *sites,
                                            const double *re,
                                            const double *im,
                                            struct BandedgeDispersion **out);

/**
 * # Safety
 * `d` must be NULL or a pointer from a `bandedge_dispersion_*` constructor.
 */
void bandedge_dispersion_free(struct BandedgeDispersion *d);

/**
 * Symbol value e(p) at a torus point p (length 2; second entry ignored for
 * dim = 1).
 *
 * # Safety
 * `d`, `p` (2 doubles) and `out` must be valid.
 */
enum BandedgeStatus bandedge_dispersion_symbol(const struct BandedgeDispersion *d,
                                               const double *p,
                                               double *out);

/**
 * Locate and certify the band extrema on a 256-point scan per axis.
 *
 * # Safety
 * `d` and `out` must be valid.
 */
enum BandedgeStatus bandedge_dispersion_extrema(const struct BandedgeDispersion *d,
                                                struct BandedgeExtrema *out);

/**
 * Potential from n (site, value) pairs; duplicate sites are rejected.
 *
 * # Safety
 * `sites` must point to 2n i64 values, `values` to n doubles, `out` valid.
 */
enum BandedgeStatus bandedge_potential_new(uint32_t dim,
                                           size_t n,
                                           const int64_t *sites,
                                           const double *values,
                                           struct BandedgePotential **out);

/**
 * # Safety
 * `p` must be NULL or a pointer from `bandedge_potential_new`.
 */
void bandedge_potential_free(struct BandedgePotential *p);

/**
 * Total potential mass kappa0 = sum v(x).
 *
 * # Safety
 * `p` and `out` must be valid.
 */
enum BandedgeStatus bandedge_potential_kappa0(const struct BandedgePotential *p, double *out);

/**
 * Green-function evaluator with the default quadrature for the dimension;
 * fails if the dispersion's extrema are degenerate or non-unique.
 *
 * # Safety
 * `d` and `out` must be valid.
 */
enum BandedgeStatus bandedge_evaluator_new(const struct BandedgeDispersion *d,
                                           struct BandedgeEvaluator **out);

/**
 * # Safety
 * `g` must be NULL or a pointer from `bandedge_evaluator_new`.
 */
void bandedge_evaluator_free(struct BandedgeEvaluator *g);

/**
 * a(z) = int dp / (z - e(p)) for z outside the band, with the estimated
 * quadrature error.
 *
 * # Safety
 * `g`, `value` and `est_error` must be valid.
 */
enum BandedgeStatus bandedge_a_of_z(const struct BandedgeEvaluator *g,
                                    double z,
                                    double *value,
                                    double *est_error);

/**
 * Lattice Green function G(x; z) (site given as 2 i64; second entry
 * ignored for dim = 1).
 *
 * # Safety
 * `g`, `x` (2 i64), `value`, `est_error` must be valid.
 */
enum BandedgeStatus bandedge_green_x(const struct BandedgeEvaluator *g,
                                     const int64_t *x,
                                     double z,
                                     double *value,
                                     double *est_error);

/**
 * lambda(z) = sup spectrum of the Birman–Schwinger matrix, clamped at 0.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_lambda_max(const struct BandedgeEvaluator *g,
                                        const struct BandedgePotential *p,
                                        double z,
                                        double *out);

/**
 * Number of Birman–Schwinger branches with mu * lambda_k(z) >= 1.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_count_bs_crossings(const struct BandedgeEvaluator *g,
                                                const struct BandedgePotential *p,
                                                double mu,
                                                double z,
                                                size_t *out);

/**
 * Threshold constant kappa1 (top edge); requires kappa0 = 0.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_kappa_top(const struct BandedgeEvaluator *g,
                                       const struct BandedgePotential *p,
                                       double *out);

/**
 * Threshold constant kappa2 (bottom edge); requires kappa0 = 0.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_kappa_bottom(const struct BandedgeEvaluator *g,
                                          const struct BandedgePotential *p,
                                          double *out);

/**
 * Leading Morse constant pi*J0 of the a(z) edge law; edge 0 = top,
 * 1 = bottom.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_morse_constant(const struct BandedgeEvaluator *g,
                                            uint32_t edge,
                                            double *pi_j0,
                                            double *extraction_error);

/**
 * Discrete eigenvalue above the band at coupling mu, when it exists.
 * `exists` is set accordingly; `energy` and `ln_gap` are written only when
 * it does. `ln_gap` carries ln(E - e_max), meaningful even when the gap
 * underflows `energy` itself.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_solve_top(const struct BandedgeEvaluator *g,
                                       const struct BandedgePotential *p,
                                       double mu,
                                       bool *exists,
                                       double *energy,
                                       double *ln_gap);

/**
 * Discrete eigenvalue below the band at coupling mu, when it exists;
 * `ln_gap` carries ln(e_min - e).
 *
 * # Safety
 * All pointers must be valid.
 */
enum BandedgeStatus bandedge_solve_bottom(const struct BandedgeEvaluator *g,
                                          const struct BandedgePotential *p,
                                          double mu,
                                          bool *exists,
                                          double *energy,
                                          double *ln_gap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BANDEDGE_H */
