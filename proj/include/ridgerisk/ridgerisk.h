#ifndef RIDGERISK_RIDGERISK_H
#define RIDGERISK_RIDGERISK_H

/* C interface to the ridgerisk library.
 *
 * Every function returns an rr_status. On failure the message of the most
 * recent error on the calling thread is available from rr_last_error().
 * Objects are opaque handles released with their matching _free function;
 * strings returned through char** are released with rr_string_free.
 * Finite dimensions are passed as positive integers and 0 means infinite.
 * A tolerance (eps, tol) of 0 selects the library default.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RIDGERISK_BUILDING_LIBRARY)
#    define RR_API __declspec(dllexport)
#  else
#    define RR_API __declspec(dllimport)
#  endif
#else
#  define RR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rr_status {
  RR_OK = 0,
  RR_ERR_INVALID_ARGUMENT = 1,
  RR_ERR_OUT_OF_RANGE = 2,
  RR_ERR_DIVERGENCE = 3,
  RR_ERR_UNDEFINED = 4,
  RR_ERR_INFEASIBLE = 5,
  RR_ERR_INCONSISTENT = 6,
  RR_ERR_NO_SOLUTION = 7,
  RR_ERR_CONFIG = 8,
  RR_ERR_IO = 9,
  RR_ERR_INTERNAL = 10,
  RR_ERR_NULL_POINTER = 11
} rr_status;

typedef enum rr_regime {
  RR_REGIME_RIDGE = 0,
  RR_REGIME_RIDGELESS_OVER = 1,
  RR_REGIME_RIDGELESS_UNDER = 2
} rr_regime;

typedef enum rr_resolvent_kind { RR_RESOLVENT_IDENTITY = 0, RR_RESOLVENT_SIGNAL = 1 } rr_resolvent_kind;

typedef enum rr_distribution { RR_GAUSSIAN = 0, RR_RADEMACHER = 1 } rr_distribution;

typedef enum rr_asymptotic_case {
  RR_CASE_REGVAR_ALPHA_GT1 = 0,
  RR_CASE_REGVAR_ALPHA_EQ1 = 1,
  RR_CASE_GEOMETRIC_STEP = 2
} rr_asymptotic_case;

typedef struct rr_spectrum rr_spectrum;
typedef struct rr_signal rr_signal;
typedef struct rr_design rr_design;

typedef struct rr_tail_ranks {
  double r1, r2, r_bar, b_k;
} rr_tail_ranks;

typedef struct rr_signal_forms {
  double norm_sq, sigma_norm_sq, inv_sigma_norm_sq, q1, q2;
} rr_signal_forms;

typedef struct rr_fixed_point {
  double value, residual, low, high;
  int iterations, boundary, converged;
} rr_fixed_point;

/* Fields whose has_ flag is 0 are undefined for the instance. */
typedef struct rr_diagnostics {
  double kappa, chi_n, chi_n_prime, kappa_ridgeless, rho, c_sigma, eta, effective_rank;
  int has_kappa, has_chi_n, has_chi_n_prime, has_kappa_ridgeless, has_rho, has_c_sigma;
} rr_diagnostics;

typedef struct rr_bounds {
  uint64_t k_star;
  double c_star, v_bound, b_bound, r1, r2, b_k;
  int sample_budget_check;
} rr_bounds;

typedef struct rr_risk_report {
  double lambda, lambda_star, v_n, b_n, r_n;
  rr_regime regime;
  rr_diagnostics diagnostics;
  int has_bounds;
  rr_bounds bounds;
} rr_risk_report;

typedef struct rr_sequence_risk {
  double omega_sq, risk, bias_part, var_part, direct_bias, direct_noise;
  int degenerate;
} rr_sequence_risk;

typedef struct rr_asymptotic {
  rr_asymptotic_case kind;
  double c_star, c_star_residual, lambda, sigma_n, lambda_star_pred, variance_pred, bias_pred;
  double decay_ratio, rho_star;
  int has_decay_ratio, has_geometric, s_star;
} rr_asymptotic;

typedef struct rr_trial_result {
  uint64_t trial, seed;
  double lambda, v_x, b_x, s_min;
} rr_trial_result;

typedef struct rr_summary {
  double median, q10, q90, mean;
} rr_summary;

typedef struct rr_aggregate {
  double lambda;
  uint64_t trials;
  rr_summary v_x, b_x, s_min;
} rr_aggregate;

/* Library information and errors */
RR_API const char* rr_version(void);
RR_API const char* rr_last_error(void);
RR_API const char* rr_status_string(rr_status status);
RR_API void rr_string_free(char* s);
/* RIDGERISK_THREADS, or 1 when unset. */
RR_API unsigned rr_default_threads(void);

/* Spectra */
RR_API rr_status rr_spectrum_power_law(double alpha, uint64_t dimension, double scale, rr_spectrum** out);
RR_API rr_status rr_spectrum_log_power_law(double alpha, uint64_t dimension, double scale, rr_spectrum** out);
RR_API rr_status rr_spectrum_geometric_step(double p, double q, uint64_t dimension, double scale,
                                            rr_spectrum** out);
RR_API rr_status rr_spectrum_explicit(const double* values, size_t count, rr_spectrum** out);
RR_API rr_status rr_spectrum_isotropic(uint64_t dimension, rr_spectrum** out);
RR_API rr_status rr_spectrum_truncated(const rr_spectrum* s, uint64_t dimension, rr_spectrum** out);
RR_API void rr_spectrum_free(rr_spectrum* s);

RR_API rr_status rr_spectrum_dimension(const rr_spectrum* s, uint64_t* dimension);
RR_API rr_status rr_spectrum_eigenvalue(const rr_spectrum* s, uint64_t i, double* out);
RR_API rr_status rr_spectrum_tail_sum(const rr_spectrum* s, uint64_t k, double eps, double* out);
RR_API rr_status rr_spectrum_trace_resolvent(const rr_spectrum* s, double shift, int power, double eps,
                                             double* out);
RR_API rr_status rr_spectrum_effective_rank(const rr_spectrum* s, uint64_t n, double* out);
RR_API rr_status rr_spectrum_inverse_effective_rank(const rr_spectrum* s, double m, uint64_t* index,
                                                    int* empty);
RR_API rr_status rr_spectrum_tail_ranks(const rr_spectrum* s, uint64_t k, double eps, rr_tail_ranks* out);

/* Signals (1-based eigen-indices) */
RR_API rr_status rr_signal_from_pairs(const uint64_t* indices, const double* values, size_t count,
                                      rr_signal** out);
RR_API rr_status rr_signal_top_k_ones(uint64_t k, rr_signal** out);
RR_API void rr_signal_free(rr_signal* s);
RR_API rr_status rr_signal_compute_forms(const rr_signal* sig, const rr_spectrum* s, double shift,
                                         rr_signal_forms* out);

/* Fixed points and diagnostics */
RR_API rr_status rr_solve_lambda_star(const rr_spectrum* s, uint64_t n, double lambda, double tol,
                                      rr_fixed_point* out);
RR_API rr_status rr_solve_lambda_zero(const rr_spectrum* s, double m, double tol, rr_fixed_point* out);
RR_API rr_status rr_solve_mu_star(const rr_spectrum* s, uint64_t n, double zeta, double mu, double tol,
                                  rr_fixed_point* out);
RR_API rr_status rr_diagnostics_compute(const rr_spectrum* s, const rr_signal* sig, uint64_t n,
                                        double lambda, double eta, rr_diagnostics* out);
RR_API rr_status rr_suggest_lambda_range(const rr_spectrum* s, uint64_t n, double c_prime, double* low,
                                         double* high);

/* Effective risk */
RR_API rr_status rr_effective_variance(const rr_spectrum* s, uint64_t n, double tau, double lambda,
                                       double* out);
RR_API rr_status rr_effective_bias(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double lambda,
                                   double* out);
RR_API rr_status rr_proposition_bounds(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double tau,
                                       double lambda, rr_bounds* out);
RR_API rr_status rr_risk_report_compute(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double tau,
                                        double lambda, double eta, rr_risk_report* out);
RR_API rr_status rr_population_resolvent(const rr_spectrum* s, const rr_signal* sig, double zeta, double mu,
                                         rr_resolvent_kind which, double* out);
RR_API rr_status rr_variance_from_free_energy(const rr_spectrum* s, uint64_t n, double tau, double lambda,
                                              double rel_step, double* out);
RR_API rr_status rr_bias_from_free_energy(const rr_spectrum* s, const rr_signal* sig, uint64_t n,
                                          double lambda, double rel_step, double* out);

/* Equivalent sequence model */
RR_API rr_status rr_sequence_risk_given_omega(const rr_spectrum* s, const rr_signal* sig, uint64_t n,
                                              double lambda_star, double omega, rr_sequence_risk* out);
RR_API rr_status rr_solve_omega(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double tau,
                                double lambda_star, rr_sequence_risk* out);

/* Large-n asymptotics */
RR_API rr_status rr_cstar_case1(double nu, double alpha, double* out);
RR_API rr_status rr_g_series(double p, double q, int r, double t, double eps, double* out);
RR_API rr_status rr_predict_asymptotic(const rr_spectrum* s, double nu, uint64_t n, double tau,
                                       const rr_signal* sig, rr_asymptotic* out);

/* Monte Carlo */
RR_API rr_status rr_design_sample(const rr_spectrum* s, uint64_t truncation_dim, uint64_t n,
                                  rr_distribution distribution, uint64_t seed, rr_design** out);
/* x is row-major n x dim; sigma has dim entries. */
RR_API rr_status rr_design_from_matrix(const double* x, uint64_t n, uint64_t dim, const double* sigma,
                                       rr_design** out);
RR_API void rr_design_free(rr_design* d);
RR_API rr_status rr_design_shape(const rr_design* d, uint64_t* n, uint64_t* dim, uint64_t* rank);
/* Copies the design row-major into buffer, which must hold n * dim values. */
RR_API rr_status rr_design_entries(const rr_design* d, double* buffer, size_t length);
RR_API rr_status rr_design_s_min(const rr_design* d, double* out);
RR_API rr_status rr_design_truncation_diagnostic(const rr_design* d, double* out);
RR_API rr_status rr_empirical_variance(const rr_design* d, double tau, double lambda, double* out);
RR_API rr_status rr_empirical_bias(const rr_design* d, const rr_signal* sig, double lambda, double* out);
RR_API rr_status rr_empirical_resolvent_trace(const rr_design* d, const rr_signal* sig, double zeta,
                                              double mu, rr_resolvent_kind which, double* out);
/* results must hold trials * lambda_count entries, aggregates lambda_count. */
RR_API rr_status rr_run_trials(const rr_spectrum* s, const rr_signal* sig, uint64_t truncation_dim,
                               uint64_t n, rr_distribution distribution, uint64_t seed, double tau,
                               const double* lambdas, size_t lambda_count, uint64_t trials,
                               unsigned threads, rr_trial_result* results, rr_aggregate* aggregates);

/* Experiments. command is "predict", "simulate" or "asymptotics". */
RR_API rr_status rr_config_normalize(const char* config_json, char** out_json);
RR_API rr_status rr_csv_header(const char* command, char** out);
RR_API rr_status rr_run_experiment(const char* command, const char* config_json, int has_seed,
                                   uint64_t seed, unsigned threads, char** csv, char** trial_csv);
/* Writes the CSV to out_path (or the config's output field when out_path is
 * NULL) and the trial CSV to the config's trial_output field when present.
 * A relative trial_output is resolved against the directory of the CSV. */
RR_API rr_status rr_run_experiment_file(const char* command, const char* config_path,
                                        const char* out_path, int has_seed, uint64_t seed,
                                        unsigned threads);

#ifdef __cplusplus
}
#endif

#endif
