#ifndef KGCP_H
#define KGCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KgcpPolicy {
  KGCP_POLICY_EXPECTED_IMPROVEMENT = 0,
  KGCP_POLICY_KGCP = 1,
  KGCP_POLICY_SOFT_KGCP = 2,
  KGCP_POLICY_UCB = 3,
} KgcpPolicy;

typedef enum KgcpStatus {
  KGCP_STATUS_OK = 0,
  KGCP_STATUS_NULL_POINTER = 1,
  KGCP_STATUS_INVALID_ARGUMENT = 2,
  KGCP_STATUS_INSUFFICIENT_DATA = 3,
  KGCP_STATUS_DUPLICATE_DECISION = 4,
  KGCP_STATUS_ILL_CONDITIONED = 5,
  KGCP_STATUS_NO_VALID_START = 6,
  KGCP_STATUS_SAMPLING_STALLED = 7,
  KGCP_STATUS_UNDEFINED_GRADIENT = 8,
  KGCP_STATUS_ACQUISITION_FAILED = 9,
  KGCP_STATUS_EVALUATION_FAILED = 10,
  KGCP_STATUS_CONFIG = 11,
  KGCP_STATUS_IO = 12,
  KGCP_STATUS_PANIC = 99,
} KgcpStatus;

// Fitted Kriging surrogate.
typedef struct KgcpModel KgcpModel;

// Built-in benchmark problem.
typedef struct KgcpProblem KgcpProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null after a
// success. The pointer stays valid until the next call on the same thread.
const char *kgcp_last_error_message(void);

// Fit an ordinary Kriging model with fixed correlation parameters `theta`
// (length `d`).
//
// # Safety
// `x` must hold `n * d` doubles, `y` `n`, and `lower`, `upper`, `theta` `d`
// each. `out` must be writable.
enum KgcpStatus kgcp_model_fit(const double *x,
                               const double *y,
                               size_t n,
                               size_t d,
                               const double *lower,
                               const double *upper,
                               const double *theta,
                               struct KgcpModel **out);

// Fit an ordinary Kriging model by multistart maximum likelihood with the
// default settings. The starts are drawn from `seed`.
//
// # Safety
// As for [`kgcp_model_fit`], without `theta`.
enum KgcpStatus kgcp_model_fit_mle(const double *x,
                                   const double *y,
                                   size_t n,
                                   size_t d,
                                   const double *lower,
                                   const double *upper,
                                   uint64_t seed,
                                   struct KgcpModel **out);

// # Safety
// `model` must come from a `kgcp_model_fit*` call and not be used afterwards.
void kgcp_model_free(struct KgcpModel *model);

// Number of input dimensions, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t kgcp_model_dim(const struct KgcpModel *model);

// Copy the fitted correlation parameters into `theta_out` (length `d`).
//
// # Safety
// `model` must be live; `theta_out` must hold `d` doubles.
enum KgcpStatus kgcp_model_theta(const struct KgcpModel *model, double *theta_out);

// Prediction mean and variance at `x` (length `d`).
//
// # Safety
// `model` must be live; `x` must hold `d` doubles; both outputs writable.
enum KgcpStatus kgcp_model_predict(const struct KgcpModel *model,
                                   const double *x,
                                   double *mean,
                                   double *variance);

// Gradients of the prediction mean and variance at `x`.
//
// # Safety
// `model` must be live; `x`, `dmean` and `dvariance` must hold `d` doubles.
enum KgcpStatus kgcp_model_predict_gradient(const struct KgcpModel *model,
                                            const double *x,
                                            double *dmean,
                                            double *dvariance);

// Policy value at `x`. `ucb_beta` is read only by UCB and `soft_k` only by
// the soft knowledge gradient. When `gradient` is non-null it receives `d`
// partial derivatives.
//
// # Safety
// `model` must be live; `x` must hold `d` doubles; `value` writable;
// `gradient` null or writable for `d` doubles.
enum KgcpStatus kgcp_model_policy(const struct KgcpModel *model,
                                  enum KgcpPolicy policy,
                                  const double *x,
                                  double y_max,
                                  double ucb_beta,
                                  double soft_k,
                                  double *value,
                                  double *gradient);

// Expected improvement over `y_max` for a normal prediction `(mu, s)`.
//
// # Safety
// `out` must be writable.
enum KgcpStatus kgcp_expected_improvement(double mu, double s, double y_max, double *out);

// Expected decrement below `y_max` for a normal prediction `(mu, s)`.
//
// # Safety
// `out` must be writable.
enum KgcpStatus kgcp_expected_decrement(double mu, double s, double y_max, double *out);

// Hard knowledge gradient, `min(EI, ED)`.
//
// # Safety
// `out` must be writable.
enum KgcpStatus kgcp_knowledge_gradient(double mu, double s, double y_max, double *out);

// GP-UCB exploration weight for `iteration` observations in `d` dimensions.
double kgcp_ucb_beta(size_t iteration, size_t d, double delta);

// Maximin Latin hypercube of `n` points in the box `[lower, upper]`,
// written row-major to `out` (`n * d` doubles).
//
// # Safety
// `lower`, `upper` must hold `d` doubles; `out` must hold `n * d`.
enum KgcpStatus kgcp_maximin_lhs(size_t n,
                                 size_t d,
                                 uint64_t seed,
                                 const double *lower,
                                 const double *upper,
                                 double *out);

// Look up a built-in problem by name (`branin`, `hartmann6`, `schwefel`,
// `eggholder`). Objectives are negated so that larger is better.
//
// # Safety
// `name` must be a nul-terminated string; `out` writable.
enum KgcpStatus kgcp_problem_new(const char *name, struct KgcpProblem **out);

// # Safety
// `problem` must come from [`kgcp_problem_new`] and not be used afterwards.
void kgcp_problem_free(struct KgcpProblem *problem);

// # Safety
// `problem` must be null or a live handle.
size_t kgcp_problem_dim(const struct KgcpProblem *problem);

// Bounds, global maximum and a maximizer of the problem. Any output pointer
// may be null to skip it; the array outputs take `d` doubles.
//
// # Safety
// `problem` must be live; non-null outputs must be writable.
enum KgcpStatus kgcp_problem_info(const struct KgcpProblem *problem,
                                  double *lower,
                                  double *upper,
                                  double *optimum,
                                  double *optimizer);

// Evaluate the (negated) objective at `x`.
//
// # Safety
// `problem` must be live; `x` must hold `d` doubles; `out` writable.
enum KgcpStatus kgcp_problem_evaluate(const struct KgcpProblem *problem,
                                      const double *x,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KGCP_H */
