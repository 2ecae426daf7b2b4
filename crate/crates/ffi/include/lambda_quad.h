#ifndef LAMBDA_QUAD_H
#define LAMBDA_QUAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LqStatus {
  LQ_STATUS_OK = 0,
  LQ_STATUS_NULL_POINTER = 1,
  LQ_STATUS_INVALID_UTF8 = 2,
  LQ_STATUS_PARSE = 3,
  LQ_STATUS_EVAL = 4,
  LQ_STATUS_UNKNOWN_VARIABLE = 5,
  LQ_STATUS_BUFFER_TOO_SMALL = 6,
  LQ_STATUS_PROBLEM = 7,
  LQ_STATUS_PANIC = 8,
} LqStatus;

// A parsed expression.
typedef struct LqExpr LqExpr;

// A compiled problem, from the catalog or a JSON spec.
typedef struct LqProblem LqProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *lq_last_error(void);

// Parses `text` into a new handle stored in `*out`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum LqStatus lq_expr_parse(const char *text, struct LqExpr **out);

// Releases a handle from `lq_expr_parse` or `lq_expr_diff`. Null is ignored.
//
// # Safety
// `expr` must be null or a live handle not freed before.
void lq_expr_free(struct LqExpr *expr);

// Evaluates at the jet point `(x, u, ux)`.
//
// # Safety
// `expr` must be a live handle and `out` a valid pointer.
enum LqStatus lq_expr_eval(const struct LqExpr *expr, double x, double u, double ux, double *out);

// Evaluates with `values[k]` bound to the k-th of `x, u, ux, w, C, C1, C2`;
// `len` may be shorter than seven, leaving the rest unbound.
//
// # Safety
// `values` must point to `len` doubles.
enum LqStatus lq_expr_eval_vars(const struct LqExpr *expr,
                                const double *values,
                                uintptr_t len,
                                double *out);

// Differentiates with respect to the variable named `var` (`x`, `u`,
// `ux`, `w`, `C`, `C1`, `C2`) into a new handle.
//
// # Safety
// `expr` must be a live handle, `var` NUL-terminated, `out` valid.
enum LqStatus lq_expr_diff(const struct LqExpr *expr, const char *var, struct LqExpr **out);

// Writes the rendered expression into `buf`. The required size including
// the terminator goes to `*needed` when it is non-null; a null or short
// buffer yields `LQ_STATUS_BUFFER_TOO_SMALL`.
//
// # Safety
// `buf` must be null or hold `len` bytes.
enum LqStatus lq_expr_render(const struct LqExpr *expr,
                             char *buf,
                             uintptr_t len,
                             uintptr_t *needed);

// Loads a catalog problem by name.
//
// # Safety
// `name` must be NUL-terminated and `out` valid.
enum LqStatus lq_problem_from_catalog(const char *name, struct LqProblem **out);

// Compiles a problem from a JSON spec document.
//
// # Safety
// `json` must be NUL-terminated and `out` valid.
enum LqStatus lq_problem_from_json(const char *json, struct LqProblem **out);

// # Safety
// `problem` must be null or a live handle not freed before.
void lq_problem_free(struct LqProblem *problem);

// Runs the full procedure. `*passed` is set to 1 iff every check passed;
// when `report` is non-null it receives the JSON report, to be released
// with `lq_string_free`.
//
// # Safety
// `problem` must be a live handle; `passed` valid; `report` null or valid.
enum LqStatus lq_problem_run(const struct LqProblem *problem,
                             double tol,
                             uintptr_t samples,
                             uint64_t seed,
                             int32_t *passed,
                             char **report);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or come from this library and not be freed before.
void lq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAMBDA_QUAD_H */
