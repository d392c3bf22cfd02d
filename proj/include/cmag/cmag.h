/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the compressive magnetometry toolkit.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call that can fail returns a cmag_status; cmag_last_error() then
 * holds a message for the calling thread. Output arguments are written only
 * on CMAG_OK.
 *
 * Units: seconds, nanotesla, hertz.
 */
#ifndef CMAG_CMAG_H
#define CMAG_CMAG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CMAG_API __declspec(dllexport)
#else
#define CMAG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cmag_status {
  CMAG_OK = 0,
  CMAG_ERR_DOMAIN = 1,
  CMAG_ERR_CONFIG = 2,
  CMAG_ERR_RESOURCE = 3,
  CMAG_ERR_NUMERIC = 4,
  CMAG_ERR_INFEASIBLE = 5,
  CMAG_ERR_UNSUPPORTED = 6,
  CMAG_ERR_CHECK = 7,
  CMAG_ERR_IO = 8,
  CMAG_ERR_ORACLE = 9,
  CMAG_ERR_INVALID_ARGUMENT = 10,
  CMAG_ERR_INTERNAL = 11
} cmag_status;

CMAG_API const char* cmag_last_error(void);
CMAG_API const char* cmag_status_string(cmag_status status);
CMAG_API int cmag_format_version(void);

typedef struct cmag_field cmag_field;
typedef struct cmag_matrix cmag_matrix;
typedef struct cmag_sweep cmag_sweep;

typedef enum cmag_basis {
  CMAG_BASIS_SPIKE = 0,
  CMAG_BASIS_WALSH_SEQUENCY = 1,
  CMAG_BASIS_WALSH_PALEY = 2,
  CMAG_BASIS_FOURIER_REAL = 3,
  CMAG_BASIS_DCT = 4
} cmag_basis;

typedef enum cmag_ensemble {
  CMAG_ENSEMBLE_BERNOULLI = 0,
  CMAG_ENSEMBLE_GAUSSIAN = 1,
  CMAG_ENSEMBLE_TERNARY = 2,
  CMAG_ENSEMBLE_SPHERE_COLUMNS = 3,
  CMAG_ENSEMBLE_PROJECTION = 4
} cmag_ensemble;

typedef enum cmag_scenario {
  CMAG_SCENARIO_WALSH_SPIKE = 0,
  CMAG_SCENARIO_RANDOM_MULTITONE = 1,
  CMAG_SCENARIO_RANDOM_SPIKE = 2,
  CMAG_SCENARIO_QUADRATURE_GAP = 3,
  CMAG_SCENARIO_NOISY = 4
} cmag_scenario;

/* ---- fields ---------------------------------------------------------- */

CMAG_API cmag_status cmag_field_spike_train(uint64_t seed, double T, int n_events, double half_width,
                                            double amplitude, int grid_order, cmag_field** out);
CMAG_API cmag_status cmag_field_multitone(uint64_t seed, int S, size_t n, double T, cmag_field** out);
CMAG_API cmag_status cmag_field_from_tones(double T, const double* amplitude, const double* frequency,
                                           const double* phase, size_t count, cmag_field** out);
CMAG_API cmag_status cmag_field_load(const char* path, cmag_field** out);
CMAG_API cmag_status cmag_field_save(const cmag_field* field, const char* path);
CMAG_API cmag_status cmag_field_evaluate(const cmag_field* field, double t, double* out);
CMAG_API cmag_status cmag_field_duration(const cmag_field* field, double* out);
/* B_j = b(s_j) at the 2^N cell midpoints; len must be 2^N. */
CMAG_API cmag_status cmag_field_discretize(const cmag_field* field, int N, double* B, size_t len);
CMAG_API void cmag_field_free(cmag_field* field);

/* ---- matrices and diagnostics ---------------------------------------- */

CMAG_API cmag_status cmag_coherence(cmag_basis phi, cmag_basis psi, int N, double* out);

CMAG_API cmag_status cmag_matrix_random(cmag_ensemble kind, uint64_t seed, size_t m, size_t n, cmag_matrix** out);
/* Rows Phi^T Psi for the listed row indices. */
CMAG_API cmag_status cmag_matrix_subsample(cmag_basis phi, cmag_basis psi, int N, const size_t* rows, size_t m,
                                           cmag_matrix** out);
/* A = G Psi. */
CMAG_API cmag_status cmag_matrix_compose(const cmag_matrix* G, cmag_basis psi, cmag_matrix** out);
CMAG_API cmag_status cmag_matrix_from_data(size_t m, size_t n, const double* row_major, cmag_matrix** out);
CMAG_API cmag_status cmag_matrix_load(const char* path, cmag_matrix** out);
CMAG_API cmag_status cmag_matrix_save(const cmag_matrix* A, const char* path);
CMAG_API cmag_status cmag_matrix_dims(const cmag_matrix* A, size_t* m, size_t* n);
CMAG_API cmag_status cmag_matrix_data(const cmag_matrix* A, double* row_major, size_t len);
CMAG_API void cmag_matrix_free(cmag_matrix* A);

/* Exact restricted isometry constant by enumeration; budget 0 = default. */
CMAG_API cmag_status cmag_ric(const cmag_matrix* A, int S, uint64_t budget, double* delta);
CMAG_API cmag_status cmag_rip_check(const cmag_matrix* A, int S, double delta, uint64_t budget, int* holds);

/* ---- recovery -------------------------------------------------------- */

typedef struct cmag_solver_options {
  double feasibility_tol;
  double optimality_tol;
  int max_iterations;
  int use_admm; /* 0 = homotopy with ADMM fallback */
} cmag_solver_options;

typedef struct cmag_recovery_info {
  double l1_value;
  double residual_norm;
  double duality_gap;
  int iterations;
  int converged;
  int polished;
} cmag_recovery_info;

CMAG_API void cmag_solver_options_default(cmag_solver_options* opts);

/* epsilon == 0 solves min |x|_1 s.t. Ax = y, otherwise |y - Ax|_2 <= epsilon.
 * opts and info may be NULL. */
CMAG_API cmag_status cmag_recover(const cmag_matrix* A, const double* y, size_t m, double epsilon,
                                  const cmag_solver_options* opts, double* x, size_t n, cmag_recovery_info* info);
/* Dense simplex reference for m, n <= 24. */
CMAG_API cmag_status cmag_lp_oracle(const cmag_matrix* A, const double* y, size_t m, double* x, size_t n,
                                    double* objective);

/* ---- experiments ----------------------------------------------------- */

#define CMAG_MAX_M_VALUES 256
#define CMAG_MAX_TONES 64

typedef struct cmag_experiment_config {
  cmag_scenario scenario;
  int N;
  double T;
  size_t m_values[CMAG_MAX_M_VALUES];
  size_t m_count;
  int trials;
  double msqe_threshold;
  double msqe_time_unit; /* seconds per MSQE time unit; 1e-3 gives (nT)^2 ms */
  uint64_t master_seed;
  uint64_t n_reps;
  double noise_sigma;
  unsigned threads;
  int fixed_reciprocals[CMAG_MAX_TONES];
  size_t reciprocal_count;
  cmag_basis multitone_basis;
  int multitone_exact_integrals;
  cmag_solver_options solver;
} cmag_experiment_config;

typedef struct cmag_sweep_point {
  size_t m;
  int trials;
  int successes;
  double p_suc;
  double mean_failure_msqe;
  double median_recovery_error;
} cmag_sweep_point;

typedef struct cmag_trial_record {
  uint64_t seed;
  size_t m;
  double msqe;
  int success;
  int iterations;
  int converged;
  int polished;
  double duality_gap;
  double l1_value;
  double residual_norm;
  double epsilon;
  double recovery_error;
  double wall_time;
} cmag_trial_record;

CMAG_API cmag_status cmag_experiment_config_default(cmag_scenario scenario, cmag_experiment_config* out);
CMAG_API cmag_status cmag_sweep_run(const cmag_experiment_config* cfg, cmag_sweep** out);
CMAG_API cmag_status cmag_sweep_point_count(const cmag_sweep* sweep, size_t* count);
CMAG_API cmag_status cmag_sweep_get_point(const cmag_sweep* sweep, size_t i, cmag_sweep_point* out);
CMAG_API cmag_status cmag_sweep_record_count(const cmag_sweep* sweep, size_t* count);
CMAG_API cmag_status cmag_sweep_get_record(const cmag_sweep* sweep, size_t i, cmag_trial_record* out);
/* as_json = 0 writes the CSV summary. */
CMAG_API cmag_status cmag_sweep_write(const cmag_sweep* sweep, const char* path, int as_json);
CMAG_API void cmag_sweep_free(cmag_sweep* sweep);

/* One trial of the sweep grid. rec_path and truth_path (either may be NULL)
 * receive two-column time/value dumps of the reconstruction and the truth. */
CMAG_API cmag_status cmag_trial_run(const cmag_experiment_config* cfg, size_t m, int trial_index,
                                    cmag_trial_record* out, const char* rec_path, const char* truth_path);

/* The field a trial of the sweep grid measures. Not available for the noisy
 * scenario, whose instances are sparse vectors rather than fields. */
CMAG_API cmag_status cmag_trial_field(const cmag_experiment_config* cfg, size_t m, int trial_index, cmag_field** out);

/* Quadrature gap between exact sensor integrals and midpoint inner products
 * for m random (walsh_pipeline = 0) or Walsh (1) control sequences.
 * Returns CMAG_ERR_CHECK when the analytic bound is exceeded. */
CMAG_API cmag_status cmag_quadrature_check(const cmag_field* field, int N, size_t m, uint64_t seed,
                                           int walsh_pipeline, double* gap, double* bound);

/* Measures the discretized field with the rows of G (m x 2^N, time domain),
 * recovers it in basis psi and writes the reconstruction to out_path
 * (may be NULL). msqe (may be NULL) is in (nT)^2 ms. */
CMAG_API cmag_status cmag_reconstruct(const cmag_field* field, const cmag_matrix* G, cmag_basis psi, double epsilon,
                                      const char* out_path, double* msqe);

#ifdef __cplusplus
}
#endif

#endif /* CMAG_CMAG_H */
