#ifndef FRACTRACE_H
#define FRACTRACE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_INVALID_ARGUMENT = 1,
  // A finiteness condition of the expansion does not hold.
  FT_STATUS_VALIDITY = 2,
  FT_STATUS_NUMERICAL = 3,
  FT_STATUS_NULL_POINTER = 4,
  FT_STATUS_BUFFER_TOO_SMALL = 5,
  FT_STATUS_ACCEPTANCE_FLOOR = 6,
  FT_STATUS_PANIC = 7,
  FT_STATUS_OTHER = 8,
} FtStatus;

typedef enum FtConstant {
  FT_CONSTANT_K1 = 0,
  FT_CONSTANT_K2 = 1,
  FT_CONSTANT_K3 = 2,
  FT_CONSTANT_L = 3,
  FT_CONSTANT_M = 4,
  FT_CONSTANT_N = 5,
} FtConstant;

// Sum of Gaussian terms c·exp(−|x − x0|²/s²).
typedef struct FtPotential FtPotential;

// Seeded random stream.
typedef struct FtRng FtRng;

// Monte Carlo estimate; stderr is 0 for deterministic values.
typedef struct FtEstimate {
  double value;
  double stderr;
  uint64_t n_samples;
} FtEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the next call.
const char *ft_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ft_version(void);

// New random stream; free with `ft_rng_free`.
struct FtRng *ft_rng_new(uint64_t seed);

// # Safety
// `rng` must come from `ft_rng_new` and not be used afterwards. Null is ignored.
void ft_rng_free(struct FtRng *rng);

// One draw of S_t for the α/2-stable subordinator.
//
// # Safety
// `rng` must be a live handle and `out` writable.
enum FtStatus ft_sample_stable(struct FtRng *rng, double alpha, double t, double *out);

// # Safety
// `rng` must be a live handle and `out` writable.
enum FtStatus ft_sample_relativistic(struct FtRng *rng,
                                     double alpha,
                                     double m,
                                     double t,
                                     double *out);

// # Safety
// `rng` must be a live handle and `out` writable.
enum FtStatus ft_sample_mixed(struct FtRng *rng,
                              double alpha,
                              double beta,
                              double a,
                              double t,
                              double *out);

// E[S_1^η] = Γ(1 − 2η/α)/Γ(1 − η).
//
// # Safety
// `out` must be writable.
enum FtStatus ft_stable_moment(double alpha, double eta, double *out);

// p_t(0) of the d-dimensional α-stable process.
//
// # Safety
// `out` must be writable.
enum FtStatus ft_kernel_at_zero(size_t d, double alpha, double t, double *out);

// p_t(x) with `x` pointing to `d` coordinates.
//
// # Safety
// `x` must hold `d` readable values and `out` be writable.
enum FtStatus ft_kernel_value(size_t d, double alpha, double t, const double *x, double *out);

// New zero potential in `d` dimensions; null if `d` is invalid.
struct FtPotential *ft_potential_new(size_t d);

// Parse `gaussian:c=..,s=..[,x0=a|b];...` or `zero` into a new handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum FtStatus ft_potential_parse(const char *text, size_t d, struct FtPotential **out);

// # Safety
// `p` must come from `ft_potential_new` or `ft_potential_parse` and not be used afterwards. Null is ignored.
void ft_potential_free(struct FtPotential *p);

// Append c·exp(−|x − center|²/width²); `center` holds `d` values (null means the origin).
//
// # Safety
// `p` must be a live handle; `center` null or `d` readable values.
enum FtStatus ft_potential_add_gaussian(struct FtPotential *p,
                                        double amplitude,
                                        double width,
                                        const double *center);

// V(x) with `x` holding the potential's dimension of values.
//
// # Safety
// `p` must be a live handle, `x` readable and `out` writable.
enum FtStatus ft_potential_evaluate(const struct FtPotential *p, const double *x, double *out);

// ∫V^k.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum FtStatus ft_potential_integral_power(const struct FtPotential *p, uint32_t k, double *out);

// ∫|∇V|².
//
// # Safety
// `p` must be a live handle and `out` writable.
enum FtStatus ft_potential_dirichlet_energy(const struct FtPotential *p, double *out);

// K1, K2, K3 or L, M, N. With `analytic` (α = 2 only) the value comes from
// quadrature and `n_samples`, `seed` are ignored.
//
// # Safety
// `out` must be writable.
enum FtStatus ft_constant(enum FtConstant which,
                          size_t d,
                          double alpha,
                          bool analytic,
                          uint64_t n_samples,
                          uint64_t seed,
                          struct FtEstimate *out);

// Monte Carlo C_{n,j}(V).
//
// # Safety
// `p` must be a live handle and `out` writable.
enum FtStatus ft_coefficient(const struct FtPotential *p,
                             uint32_t n,
                             uint32_t j,
                             double alpha,
                             uint64_t n_samples,
                             uint64_t seed,
                             struct FtEstimate *out);

// A_J(α) row-major into `out`, which must hold (J−1)² values.
//
// # Safety
// `out` must hold `capacity` writable values.
enum FtStatus ft_matrix_aj(uint32_t j_max, double alpha, double *out, size_t capacity);

// Spectral trace curve of a 1D or 2D potential on [−L, L]^d with N modes per
// axis, fitted against the (J, M) exponent schedule plus the cutoff power.
// Writes up to `capacity` terms and their count to `count`.
//
// # Safety
// `p` must be a live handle; the three arrays must hold `capacity` writable
// values and `count` must be writable.
enum FtStatus ft_trace_fit(const struct FtPotential *p,
                           double alpha,
                           double half_period,
                           size_t modes,
                           double t_min,
                           double t_max,
                           size_t points,
                           uint32_t j_max,
                           uint32_t m,
                           double *exponents,
                           double *coefficients,
                           double *uncertainties,
                           size_t capacity,
                           size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACTRACE_H */
