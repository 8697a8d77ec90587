#ifndef KHINTCHINE_H
#define KHINTCHINE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

enum KhStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  KH_STATUS_OK = 0,
  KH_STATUS_NULL_POINTER = 1,
  KH_STATUS_INVALID_UTF8 = 2,
  KH_STATUS_PARSE = 3,
  KH_STATUS_INVALID_SYSTEM = 4,
  KH_STATUS_DOMAIN = 5,
  KH_STATUS_PRECONDITION = 6,
  KH_STATUS_CERTIFICATE_FAILED = 7,
  KH_STATUS_PANIC = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum KhStatus KhStatus;
#else
typedef int32_t KhStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Values of the `kind` argument of [`kh_transform`].
enum KhTransformKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  KH_TRANSFORM_KIND_R1 = 0,
  KH_TRANSFORM_KIND_R2 = 1,
  KH_TRANSFORM_KIND_PROCEDURE1 = 2,
  KH_TRANSFORM_KIND_PROCEDURE2 = 3,
  KH_TRANSFORM_KIND_DYADIZE = 4,
  KH_TRANSFORM_KIND_RADEMACHERIZE = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum KhTransformKind KhTransformKind;
#else
typedef int32_t KhTransformKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque handle to a martingale-difference system.
typedef struct KhMdSystem KhMdSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next library call on the same thread.
const char *kh_last_error(void);

// Parses a system from JSON. The system is not validated; see
// [`kh_md_validate`].
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable pointer.
KhStatus kh_md_from_json(const char *json, struct KhMdSystem **out);

// # Safety
// `d` must be null or a handle from this library not yet freed.
void kh_md_free(struct KhMdSystem *d);

// # Safety
// `d` must be a live handle and `out` writable. Free the result with
// [`kh_string_free`].
KhStatus kh_md_to_json(const struct KhMdSystem *d, char **out);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void kh_string_free(char *s);

// Number of levels of `d`.
//
// # Safety
// `d` must be a live handle and `out` writable.
KhStatus kh_md_levels(const struct KhMdSystem *d, size_t *out);

// Writes whether `d` satisfies the martingale-difference invariants and, if
// `report_json` is not null, the full validation report.
//
// # Safety
// `d` must be a live handle, `valid` writable, `report_json` null or
// writable.
KhStatus kh_md_validate(const struct KhMdSystem *d, bool *valid, char **report_json);

// `||sum d_k||_p`.
//
// # Safety
// `d` must be a live handle and `out` writable.
KhStatus kh_md_pnorm(const struct KhMdSystem *d, double p, double *out);

// `||S(d)||_inf` with the CWW square function.
//
// # Safety
// `d` must be a live handle and `out` writable.
KhStatus kh_md_sup_cww(const struct KhMdSystem *d, double *out);

// `U(d) = ||sum d_k||_p / ||S(d)||_inf`.
//
// # Safety
// `d` must be a live handle and `out` writable.
KhStatus kh_md_u_ratio(const struct KhMdSystem *d, double p, double *out);

// `||(r_1 + ... + r_n) / sqrt n||_p`.
//
// # Safety
// `out` must be writable.
KhStatus kh_rademacher_pnorm(size_t n, double p, double *out);

// The Gaussian limit `sqrt 2 (Gamma((p+1)/2) / sqrt pi)^(1/p)`, `p > 2`.
//
// # Safety
// `out` must be writable.
KhStatus kh_khintchine_constant(double p, double *out);

// `ln Gamma(x)` for `x > 0`.
//
// # Safety
// `out` must be writable.
KhStatus kh_log_gamma(double x, double *out);

// Applies a transform. `level` is `k` for R1 and R2, `m` for the procedures
// and ignored by the pipelines. On success `*out` receives a new handle,
// also when certificates fail (status `CertificateFailed`). If `report_json`
// is not null it receives the transform report.
//
// # Safety
// `d` must be a live handle, `out` writable, `report_json` null or writable.
KhStatus kh_transform(const struct KhMdSystem *d,
                      int32_t kind,
                      size_t level,
                      double p,
                      struct KhMdSystem **out,
                      char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KHINTCHINE_H */
