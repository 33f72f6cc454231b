#ifndef QORTHO_H
#define QORTHO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QorthoDensityKind {
  QORTHO_DENSITY_KIND_N = 0,
  QORTHO_DENSITY_KIND_CN = 1,
  QORTHO_DENSITY_KIND_R = 2,
  QORTHO_DENSITY_KIND_U = 3,
  QORTHO_DENSITY_KIND_T = 4,
  QORTHO_DENSITY_KIND_K = 5,
} QorthoDensityKind;

typedef enum QorthoExpansionKind {
  QORTHO_EXPANSION_KIND_N_OVER_U = 0,
  QORTHO_EXPANSION_KIND_U_OVER_N = 1,
  QORTHO_EXPANSION_KIND_CN_OVER_N = 2,
  QORTHO_EXPANSION_KIND_N_OVER_CN = 3,
  QORTHO_EXPANSION_KIND_R_OVER_N = 4,
  QORTHO_EXPANSION_KIND_N_OVER_R = 5,
  QORTHO_EXPANSION_KIND_CN_OVER_K = 6,
  QORTHO_EXPANSION_KIND_CN_OVER_U = 7,
  QORTHO_EXPANSION_KIND_MEHLER = 8,
  QORTHO_EXPANSION_KIND_PM_Q0 = 9,
} QorthoExpansionKind;

typedef enum QorthoFamilyKind {
  QORTHO_FAMILY_KIND_Q_HERMITE = 0,
  QORTHO_FAMILY_KIND_ROGERS = 1,
  QORTHO_FAMILY_KIND_AL_SALAM_CHIHARA = 2,
  QORTHO_FAMILY_KIND_BIG_B = 3,
  QORTHO_FAMILY_KIND_CHEB_T = 4,
  QORTHO_FAMILY_KIND_CHEB_U = 5,
  QORTHO_FAMILY_KIND_CHEB_T_HAT = 6,
  QORTHO_FAMILY_KIND_CHEB_U_HAT = 7,
  QORTHO_FAMILY_KIND_CLASSICAL_HERMITE = 8,
  QORTHO_FAMILY_KIND_KESTEN = 9,
  QORTHO_FAMILY_KIND_KESTEN_HAT = 10,
} QorthoFamilyKind;

typedef enum QorthoPairKind {
  QORTHO_PAIR_KIND_ASC_TO_HERMITE = 0,
  QORTHO_PAIR_KIND_HERMITE_TO_ASC = 1,
  QORTHO_PAIR_KIND_CHEB_U_HAT_TO_HERMITE = 2,
  QORTHO_PAIR_KIND_HERMITE_TO_CHEB_U_HAT = 3,
  QORTHO_PAIR_KIND_ROGERS_TO_ROGERS = 4,
  QORTHO_PAIR_KIND_ROGERS_TO_HERMITE = 5,
  QORTHO_PAIR_KIND_HERMITE_TO_ROGERS = 6,
  QORTHO_PAIR_KIND_CHEB_U_HAT_TO_ASC = 7,
  QORTHO_PAIR_KIND_KESTEN_HAT_TO_ASC = 8,
  QORTHO_PAIR_KIND_CHEB_T_FROM_U = 9,
  QORTHO_PAIR_KIND_CHEB_U_FROM_T = 10,
  QORTHO_PAIR_KIND_HERMITE_TO_CLASSICAL_ASC = 11,
} QorthoPairKind;

// Status codes; 3 to 5 match the CLI exit codes for the same failures.
typedef enum QorthoStatus {
  QORTHO_STATUS_OK = 0,
  QORTHO_STATUS_NULL_POINTER = 1,
  QORTHO_STATUS_INVALID_ARGUMENT = 2,
  QORTHO_STATUS_OUT_OF_RANGE = 3,
  QORTHO_STATUS_NONCONVERGENCE = 4,
  QORTHO_STATUS_ENVELOPE_VIOLATION = 5,
  QORTHO_STATUS_PANIC = 6,
} QorthoStatus;

typedef struct QorthoDensity QorthoDensity;

typedef struct QorthoExpansion QorthoExpansion;

typedef struct QorthoFamily QorthoFamily;

typedef struct QorthoSampler QorthoSampler;

// Parameters; fields a kind does not use are ignored.
typedef struct QorthoParams {
  double q;
  double rho;
  double beta;
  double gamma;
  double y;
} QorthoParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *qortho_last_error(void);

// Creates a family handle.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle pointer.
enum QorthoStatus qortho_family_new(enum QorthoFamilyKind kind,
                                    struct QorthoParams p,
                                    struct QorthoFamily **out);

// F_n(x).
//
// # Safety
// `h` must come from `qortho_family_new`; `out` must be writable.
enum QorthoStatus qortho_family_eval(const struct QorthoFamily *h, size_t n, double x, double *out);

// F_0(x), ..., F_{n_max}(x) into `buf`, which holds `len >= n_max + 1` values.
//
// # Safety
// `h` must come from `qortho_family_new`; `buf` must hold `len` doubles.
enum QorthoStatus qortho_family_eval_all(const struct QorthoFamily *h,
                                         size_t n_max,
                                         double x,
                                         double *buf,
                                         size_t len);

// # Safety
// `h` must come from `qortho_family_new` or be NULL; it is invalid afterwards.
void qortho_family_free(struct QorthoFamily *h);

// Creates a density handle.
//
// # Safety
// `out` must be writable.
enum QorthoStatus qortho_density_new(enum QorthoDensityKind kind,
                                     struct QorthoParams p,
                                     struct QorthoDensity **out);

// Density value at x (0 outside the support).
//
// # Safety
// `h` must come from `qortho_density_new`; `out` must be writable.
enum QorthoStatus qortho_density_eval(const struct QorthoDensity *h, double x, double *out);

// # Safety
// `h` must come from `qortho_density_new` or be NULL; it is invalid afterwards.
void qortho_density_free(struct QorthoDensity *h);

// Prepares an expansion; `tol <= 0` selects the default series tolerance and
// `k_fixed = 0` the adaptive order.
//
// # Safety
// `out` must be writable.
enum QorthoStatus qortho_expansion_new(enum QorthoExpansionKind kind,
                                       struct QorthoParams p,
                                       double tol,
                                       size_t k_fixed,
                                       struct QorthoExpansion **out);

// base(x) times the truncated sum; `k_used` (may be NULL) receives the order.
//
// # Safety
// `h` must come from `qortho_expansion_new`; `out` must be writable and
// `k_used` writable or NULL.
enum QorthoStatus qortho_expansion_eval(const struct QorthoExpansion *h,
                                        double x,
                                        double *out,
                                        size_t *k_used);

// # Safety
// `h` must come from `qortho_expansion_new` or be NULL; it is invalid afterwards.
void qortho_expansion_free(struct QorthoExpansion *h);

// Row gamma_{0,n}, ..., gamma_{n,n} of a closed-form connection, in doubles.
//
// # Safety
// `buf` must hold `len >= n + 1` doubles.
enum QorthoStatus qortho_connection_row(enum QorthoPairKind kind,
                                        struct QorthoParams p,
                                        size_t n,
                                        double *buf,
                                        size_t len);

// Sampler for f_N or f_CN with the default envelope constant.
//
// # Safety
// `density` must come from `qortho_density_new`; `out` must be writable.
enum QorthoStatus qortho_sampler_new(const struct QorthoDensity *density,
                                     uint64_t seed,
                                     struct QorthoSampler **out);

// Envelope constant M of the sampler.
//
// # Safety
// `h` must come from `qortho_sampler_new`; `out` must be writable.
enum QorthoStatus qortho_sampler_envelope(const struct QorthoSampler *h, double *out);

// Writes `n` draws into `buf`; deterministic for a given handle.
//
// # Safety
// `h` must come from `qortho_sampler_new`; `buf` must hold `n` doubles.
enum QorthoStatus qortho_sampler_draw(struct QorthoSampler *h, size_t n, double *buf);

// Acceptance rate of the last draw (NaN before the first).
//
// # Safety
// `h` must come from `qortho_sampler_new`; `out` must be writable.
enum QorthoStatus qortho_sampler_acceptance_rate(const struct QorthoSampler *h, double *out);

// # Safety
// `h` must come from `qortho_sampler_new` or be NULL; it is invalid afterwards.
void qortho_sampler_free(struct QorthoSampler *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QORTHO_H */
