#ifndef CONCMAT_H
#define CONCMAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum concmat_status {
  CONCMAT_STATUS_OK = 0,
  CONCMAT_STATUS_NULL_POINTER = 1,
  CONCMAT_STATUS_INVALID_PARAMETER = 2,
  CONCMAT_STATUS_INVALID_INPUT = 3,
  CONCMAT_STATUS_UNSUPPORTED_DIMENSION = 4,
  CONCMAT_STATUS_UNBOUNDED_SUPPORT = 5,
  CONCMAT_STATUS_DOMAIN = 6,
  CONCMAT_STATUS_TOO_LARGE = 7,
  CONCMAT_STATUS_INCOMPATIBLE = 8,
  CONCMAT_STATUS_REFUSED = 9,
  CONCMAT_STATUS_CONFIG = 10,
  CONCMAT_STATUS_IO = 11,
  CONCMAT_STATUS_BUFFER_TOO_SMALL = 12,
  CONCMAT_STATUS_PANIC = 13,
} concmat_status;

/*
 Opaque dense complex matrix.
 */
typedef struct concmat_matrix concmat_matrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or an empty string.
 The pointer stays valid until the next call on the same thread.
 */
const char *concmat_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *concmat_version(void);

/*
 Builds a real `rows × cols` matrix from row-major `data`.

 # Safety
 `data` must point to `rows * cols` doubles; `out` must be writable.
 */
enum concmat_status concmat_matrix_new_real(size_t rows,
                                            size_t cols,
                                            const double *data,
                                            struct concmat_matrix **out);

/*
 Builds a complex matrix from row-major real and imaginary parts.

 # Safety
 `re` and `im` must each point to `rows * cols` doubles; `out` must be
 writable.
 */
enum concmat_status concmat_matrix_new_complex(size_t rows,
                                               size_t cols,
                                               const double *re,
                                               const double *im,
                                               struct concmat_matrix **out);

/*
 Releases a matrix. Null is ignored.

 # Safety
 `m` must come from a `concmat_matrix_new_*` call and not be freed twice.
 */
void concmat_matrix_free(struct concmat_matrix *m);

/*
 Writes the row and column counts.

 # Safety
 `m` must be a live handle; `rows` and `cols` must be writable.
 */
enum concmat_status concmat_matrix_shape(const struct concmat_matrix *m,
                                         size_t *rows,
                                         size_t *cols);

/*
 `‖A‖_{p→q}`; pass `INFINITY` for ∞. `exact` (nullable) receives 1 for
 closed-form values.

 # Safety
 `m` must be a live handle; `out` must be writable; `exact` may be null.
 */
enum concmat_status concmat_opnorm_pq(const struct concmat_matrix *m,
                                      double p,
                                      double q,
                                      double *out,
                                      int32_t *exact);

/*
 Schatten `p`-norm.

 # Safety
 `m` must be a live handle; `out` must be writable.
 */
enum concmat_status concmat_schatten_norm(const struct concmat_matrix *m, double p, double *out);

/*
 Ky Fan `k`-norm.

 # Safety
 `m` must be a live handle; `out` must be writable.
 */
enum concmat_status concmat_kyfan_norm(const struct concmat_matrix *m, size_t k, double *out);

/*
 Eigenvalues of a Hermitian matrix, nonincreasing. `len` always receives
 the count; `BufferTooSmall` is returned when `cap` is below it.

 # Safety
 `m` must be a live handle; `out` must have room for `cap` doubles;
 `len` must be writable.
 */
enum concmat_status concmat_eigvals_hermitian(const struct concmat_matrix *m,
                                              double *out,
                                              size_t cap,
                                              size_t *len);

/*
 Singular values, nonincreasing; buffer protocol as for
 [`concmat_eigvals_hermitian`].

 # Safety
 As for [`concmat_eigvals_hermitian`].
 */
enum concmat_status concmat_singular_values(const struct concmat_matrix *m,
                                            double *out,
                                            size_t cap,
                                            size_t *len);

/*
 `‖v‖_p` of a real vector.

 # Safety
 `v` must point to `len` doubles; `out` must be writable.
 */
enum concmat_status concmat_lp_norm(const double *v, size_t len, double p, double *out);

/*
 `K_E(t)` for `E = ℓq` on ℝ^dim; `+∞` when `t` exceeds `dim^{1/q}`.

 # Safety
 `out` must be writable.
 */
enum concmat_status concmat_ke_lq(double q, size_t dim, double t, double *out);

/*
 Convex-hull distance `f_c(A, x)` on `{0,…,255}^dim`. `points` holds
 `count` row-major points of length `dim`.

 # Safety
 `points` must point to `count * dim` bytes, `x` to `dim` bytes; `out`
 must be writable.
 */
enum concmat_status concmat_convex_distance(const uint8_t *points,
                                            size_t count,
                                            size_t dim,
                                            const uint8_t *x,
                                            double *out);

/*
 Parses a TOML config, runs every entry and returns the reports as a JSON
 array (timing included). `all_pass` (nullable) receives 1 when every
 entry passed. Free the string with [`concmat_string_free`].

 # Safety
 `config` must be a NUL-terminated UTF-8 string; `json_out` must be
 writable; `all_pass` may be null.
 */
enum concmat_status concmat_run_config(const char *config, char **json_out, int32_t *all_pass);

/*
 Releases a string returned by the library. Null is ignored.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void concmat_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONCMAT_H */
