// SPDX-License-Identifier: Apache-2.0

#include "cmag/cmag.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <new>
#include <string>
#include <utility>

#include "cmag/error.hpp"
#include "cmag/experiments.hpp"
#include "cmag/io.hpp"
#include "cmag/l1_recovery.hpp"
#include "cmag/random.hpp"
#include "cmag/sensing_matrix.hpp"
#include "cmag/signal_models.hpp"

struct cmag_field {
  cmag::FieldModel model;
};

struct cmag_matrix {
  cmag::SensingMatrix A;
};

struct cmag_sweep {
  cmag::SweepResult result;
};

namespace {

using namespace cmag;

thread_local std::string g_last_error;

struct BadArgument {
  std::string what;
};

void check_arg(bool cond, const char* what) {
  if (!cond) throw BadArgument{what};
}

cmag_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::domain: return CMAG_ERR_DOMAIN;
    case ErrorCode::configuration: return CMAG_ERR_CONFIG;
    case ErrorCode::resource: return CMAG_ERR_RESOURCE;
    case ErrorCode::numeric: return CMAG_ERR_NUMERIC;
    case ErrorCode::infeasible: return CMAG_ERR_INFEASIBLE;
    case ErrorCode::unsupported: return CMAG_ERR_UNSUPPORTED;
    case ErrorCode::check_failure: return CMAG_ERR_CHECK;
    case ErrorCode::io: return CMAG_ERR_IO;
    case ErrorCode::oracle_failure: return CMAG_ERR_ORACLE;
  }
  return CMAG_ERR_INTERNAL;
}

template <class F>
cmag_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CMAG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const BadArgument& e) {
    g_last_error = e.what;
    return CMAG_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CMAG_ERR_RESOURCE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CMAG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return CMAG_ERR_INTERNAL;
  }
}

BasisLabel to_label(cmag_basis b) {
  switch (b) {
    case CMAG_BASIS_SPIKE: return BasisLabel::spike;
    case CMAG_BASIS_WALSH_SEQUENCY: return BasisLabel::walsh_sequency;
    case CMAG_BASIS_WALSH_PALEY: return BasisLabel::walsh_paley;
    case CMAG_BASIS_FOURIER_REAL: return BasisLabel::fourier_real;
    case CMAG_BASIS_DCT: return BasisLabel::dct;
  }
  throw BadArgument{"unknown basis"};
}

cmag_basis from_label(BasisLabel b) {
  switch (b) {
    case BasisLabel::spike: return CMAG_BASIS_SPIKE;
    case BasisLabel::walsh_sequency: return CMAG_BASIS_WALSH_SEQUENCY;
    case BasisLabel::walsh_paley: return CMAG_BASIS_WALSH_PALEY;
    case BasisLabel::fourier_real: return CMAG_BASIS_FOURIER_REAL;
    case BasisLabel::dct: return CMAG_BASIS_DCT;
    case BasisLabel::custom: break;
  }
  return CMAG_BASIS_SPIKE;
}

RandomEnsemble to_ensemble(cmag_ensemble e) {
  switch (e) {
    case CMAG_ENSEMBLE_BERNOULLI: return RandomEnsemble::bernoulli;
    case CMAG_ENSEMBLE_GAUSSIAN: return RandomEnsemble::gaussian;
    case CMAG_ENSEMBLE_TERNARY: return RandomEnsemble::ternary;
    case CMAG_ENSEMBLE_SPHERE_COLUMNS: return RandomEnsemble::sphere_columns;
    case CMAG_ENSEMBLE_PROJECTION: return RandomEnsemble::projection;
  }
  throw BadArgument{"unknown ensemble"};
}

Scenario to_scenario(cmag_scenario s) {
  switch (s) {
    case CMAG_SCENARIO_WALSH_SPIKE: return Scenario::walsh_spike;
    case CMAG_SCENARIO_RANDOM_MULTITONE: return Scenario::random_multitone;
    case CMAG_SCENARIO_RANDOM_SPIKE: return Scenario::random_spike;
    case CMAG_SCENARIO_QUADRATURE_GAP: return Scenario::quadrature_gap;
    case CMAG_SCENARIO_NOISY: return Scenario::noisy;
  }
  throw BadArgument{"unknown scenario"};
}

int order_of(std::size_t n) {
  require(n >= 1 && std::has_single_bit(n), ErrorCode::domain, "length must be a power of two");
  return std::countr_zero(n);
}

SolverOptions to_options(const cmag_solver_options* o) {
  SolverOptions s;
  if (!o) return s;
  s.feasibility_tol = o->feasibility_tol;
  s.optimality_tol = o->optimality_tol;
  s.max_iterations = o->max_iterations;
  s.method = o->use_admm ? SolverMethod::admm : SolverMethod::homotopy;
  return s;
}

void from_options(const SolverOptions& s, cmag_solver_options* o) {
  o->feasibility_tol = s.feasibility_tol;
  o->optimality_tol = s.optimality_tol;
  o->max_iterations = s.max_iterations;
  o->use_admm = s.method == SolverMethod::admm ? 1 : 0;
}

ExperimentConfig to_config(const cmag_experiment_config* c) {
  check_arg(c != nullptr, "config is null");
  check_arg(c->m_count <= CMAG_MAX_M_VALUES, "m_count exceeds CMAG_MAX_M_VALUES");
  check_arg(c->reciprocal_count <= CMAG_MAX_TONES, "reciprocal_count exceeds CMAG_MAX_TONES");
  ExperimentConfig cfg = default_config(to_scenario(c->scenario));
  cfg.N = c->N;
  cfg.T = c->T;
  cfg.m_values.assign(c->m_values, c->m_values + c->m_count);
  cfg.trials = c->trials;
  cfg.msqe_threshold = c->msqe_threshold;
  cfg.msqe_time_unit = c->msqe_time_unit;
  cfg.master_seed = c->master_seed;
  cfg.n_reps = c->n_reps;
  cfg.noise_sigma = c->noise_sigma;
  cfg.threads = c->threads;
  cfg.fixed_reciprocals.assign(c->fixed_reciprocals, c->fixed_reciprocals + c->reciprocal_count);
  cfg.multitone_basis = to_label(c->multitone_basis);
  cfg.multitone_exact_integrals = c->multitone_exact_integrals != 0;
  cfg.solver = to_options(&c->solver);
  validate(cfg);
  return cfg;
}

void to_record(const TrialRecord& r, cmag_trial_record* out) {
  out->seed = r.seed;
  out->m = r.m;
  out->msqe = r.msqe;
  out->success = r.success;
  out->iterations = r.iterations;
  out->converged = r.converged;
  out->polished = r.polished;
  out->duality_gap = r.duality_gap;
  out->l1_value = r.l1_value;
  out->residual_norm = r.residual_norm;
  out->epsilon = r.epsilon;
  out->recovery_error = r.recovery_error;
  out->wall_time = r.wall_time;
}

}  // namespace

extern "C" {

const char* cmag_last_error(void) { return g_last_error.c_str(); }

const char* cmag_status_string(cmag_status s) {
  switch (s) {
    case CMAG_OK: return "ok";
    case CMAG_ERR_DOMAIN: return "domain error";
    case CMAG_ERR_CONFIG: return "configuration error";
    case CMAG_ERR_RESOURCE: return "resource limit";
    case CMAG_ERR_NUMERIC: return "numerical failure";
    case CMAG_ERR_INFEASIBLE: return "infeasible";
    case CMAG_ERR_UNSUPPORTED: return "unsupported";
    case CMAG_ERR_CHECK: return "check failed";
    case CMAG_ERR_IO: return "i/o error";
    case CMAG_ERR_ORACLE: return "oracle failure";
    case CMAG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CMAG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int cmag_format_version(void) { return kFormatVersion; }

// fields

cmag_status cmag_field_spike_train(uint64_t seed, double T, int n_events, double half_width, double amplitude,
                                   int grid_order, cmag_field** out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    *out = new cmag_field{sample_spike_train(seed, T, n_events, half_width, amplitude, grid_order)};
  });
}

cmag_status cmag_field_multitone(uint64_t seed, int S, size_t n, double T, cmag_field** out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    *out = new cmag_field{sample_multitone(seed, S, n, T)};
  });
}

cmag_status cmag_field_from_tones(double T, const double* amplitude, const double* frequency, const double* phase,
                                  size_t count, cmag_field** out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    check_arg(count == 0 || (amplitude && frequency && phase), "tone arrays are null");
    MultiToneField f;
    f.T = T;
    for (size_t i = 0; i < count; ++i) f.tones.push_back({amplitude[i], frequency[i], phase[i]});
    FieldModel model = f;
    validate(model);
    *out = new cmag_field{std::move(model)};
  });
}

cmag_status cmag_field_load(const char* path, cmag_field** out) {
  return guarded([&] {
    check_arg(path && out, "null argument");
    *out = new cmag_field{load_field(path)};
  });
}

cmag_status cmag_field_save(const cmag_field* field, const char* path) {
  return guarded([&] {
    check_arg(field && path, "null argument");
    save_field(path, field->model);
  });
}

cmag_status cmag_field_evaluate(const cmag_field* field, double t, double* out) {
  return guarded([&] {
    check_arg(field && out, "null argument");
    *out = evaluate(field->model, t);
  });
}

cmag_status cmag_field_duration(const cmag_field* field, double* out) {
  return guarded([&] {
    check_arg(field && out, "null argument");
    *out = duration(field->model);
  });
}

cmag_status cmag_field_discretize(const cmag_field* field, int N, double* B, size_t len) {
  return guarded([&] {
    check_arg(field && B, "null argument");
    check_arg(N >= 0 && N < 63 && len == (size_t{1} << N), "len must equal 2^N");
    const auto d = discretize(field->model, N);
    std::memcpy(B, d.B.data(), len * sizeof(double));
  });
}

void cmag_field_free(cmag_field* field) { delete field; }

// matrices

cmag_status cmag_coherence(cmag_basis phi, cmag_basis psi, int N, double* out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    *out = coherence(make_basis(to_label(phi), N), make_basis(to_label(psi), N));
  });
}

cmag_status cmag_matrix_random(cmag_ensemble kind, uint64_t seed, size_t m, size_t n, cmag_matrix** out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    *out = new cmag_matrix{random_matrix(to_ensemble(kind), seed, m, n)};
  });
}

cmag_status cmag_matrix_subsample(cmag_basis phi, cmag_basis psi, int N, const size_t* rows, size_t m,
                                  cmag_matrix** out) {
  return guarded([&] {
    check_arg(out && (rows || m == 0), "null argument");
    std::vector<std::size_t> M(rows, rows + m);
    *out = new cmag_matrix{subsample_rows(make_basis(to_label(phi), N), make_basis(to_label(psi), N), M)};
  });
}

cmag_status cmag_matrix_compose(const cmag_matrix* G, cmag_basis psi, cmag_matrix** out) {
  return guarded([&] {
    check_arg(G && out, "null argument");
    const int N = order_of(G->A.n());
    *out = new cmag_matrix{compose_with_basis(G->A, make_basis(to_label(psi), N))};
  });
}

cmag_status cmag_matrix_from_data(size_t m, size_t n, const double* row_major, cmag_matrix** out) {
  return guarded([&] {
    check_arg(row_major && out, "null argument");
    check_arg(m >= 1 && n >= 1, "empty matrix");
    SensingMatrix A;
    A.A = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        row_major, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    A.provenance = ExternalProvenance{"memory"};
    *out = new cmag_matrix{std::move(A)};
  });
}

cmag_status cmag_matrix_load(const char* path, cmag_matrix** out) {
  return guarded([&] {
    check_arg(path && out, "null argument");
    SensingMatrix A;
    A.A = load_matrix(path);
    A.provenance = ExternalProvenance{path};
    *out = new cmag_matrix{std::move(A)};
  });
}

cmag_status cmag_matrix_save(const cmag_matrix* A, const char* path) {
  return guarded([&] {
    check_arg(A && path, "null argument");
    save_matrix(path, A->A.A);
  });
}

cmag_status cmag_matrix_dims(const cmag_matrix* A, size_t* m, size_t* n) {
  return guarded([&] {
    check_arg(A && m && n, "null argument");
    *m = A->A.m();
    *n = A->A.n();
  });
}

cmag_status cmag_matrix_data(const cmag_matrix* A, double* row_major, size_t len) {
  return guarded([&] {
    check_arg(A && row_major, "null argument");
    check_arg(len == A->A.m() * A->A.n(), "len must equal m*n");
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        row_major, A->A.A.rows(), A->A.A.cols()) = A->A.A;
  });
}

void cmag_matrix_free(cmag_matrix* A) { delete A; }

cmag_status cmag_ric(const cmag_matrix* A, int S, uint64_t budget, double* delta) {
  return guarded([&] {
    check_arg(A && delta, "null argument");
    *delta = restricted_isometry_constant(A->A, S, budget ? budget : kDefaultRipBudget).delta_S;
  });
}

cmag_status cmag_rip_check(const cmag_matrix* A, int S, double delta, uint64_t budget, int* holds) {
  return guarded([&] {
    check_arg(A && holds, "null argument");
    *holds = rip_check(A->A, S, delta, budget ? budget : kDefaultRipBudget) ? 1 : 0;
  });
}

// recovery

void cmag_solver_options_default(cmag_solver_options* opts) {
  if (opts) from_options(SolverOptions{}, opts);
}

cmag_status cmag_recover(const cmag_matrix* A, const double* y, size_t m, double epsilon,
                         const cmag_solver_options* opts, double* x, size_t n, cmag_recovery_info* info) {
  return guarded([&] {
    check_arg(A && y && x, "null argument");
    check_arg(m == A->A.m() && n == A->A.n(), "vector lengths do not match the matrix");
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y, static_cast<Eigen::Index>(m));
    const auto r = solve({A->A, yv, epsilon}, to_options(opts));
    Eigen::Map<Eigen::VectorXd>(x, static_cast<Eigen::Index>(n)) = r.x_star;
    if (info) {
      info->l1_value = r.l1_value;
      info->residual_norm = r.residual_norm;
      info->duality_gap = r.duality_gap_estimate;
      info->iterations = r.iterations;
      info->converged = r.converged;
      info->polished = r.polished;
    }
  });
}

cmag_status cmag_lp_oracle(const cmag_matrix* A, const double* y, size_t m, double* x, size_t n, double* objective) {
  return guarded([&] {
    check_arg(A && y && x, "null argument");
    check_arg(m == A->A.m() && n == A->A.n(), "vector lengths do not match the matrix");
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y, static_cast<Eigen::Index>(m));
    const auto r = lp_oracle(A->A.A, yv);
    Eigen::Map<Eigen::VectorXd>(x, static_cast<Eigen::Index>(n)) = r.x;
    if (objective) *objective = r.objective;
  });
}

// experiments

cmag_status cmag_experiment_config_default(cmag_scenario scenario, cmag_experiment_config* out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    const auto cfg = default_config(to_scenario(scenario));
    check_arg(cfg.m_values.size() <= CMAG_MAX_M_VALUES, "default grid too long");
    cmag_experiment_config c{};
    c.scenario = scenario;
    c.N = cfg.N;
    c.T = cfg.T;
    std::copy(cfg.m_values.begin(), cfg.m_values.end(), c.m_values);
    c.m_count = cfg.m_values.size();
    c.trials = cfg.trials;
    c.msqe_threshold = cfg.msqe_threshold;
    c.msqe_time_unit = cfg.msqe_time_unit;
    c.master_seed = cfg.master_seed;
    c.n_reps = cfg.n_reps;
    c.noise_sigma = cfg.noise_sigma;
    c.threads = cfg.threads;
    std::copy(cfg.fixed_reciprocals.begin(), cfg.fixed_reciprocals.end(), c.fixed_reciprocals);
    c.reciprocal_count = cfg.fixed_reciprocals.size();
    c.multitone_basis = from_label(cfg.multitone_basis);
    c.multitone_exact_integrals = cfg.multitone_exact_integrals;
    from_options(cfg.solver, &c.solver);
    *out = c;
  });
}

cmag_status cmag_sweep_run(const cmag_experiment_config* cfg, cmag_sweep** out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    *out = new cmag_sweep{run_sweep(to_config(cfg))};
  });
}

cmag_status cmag_sweep_point_count(const cmag_sweep* sweep, size_t* count) {
  return guarded([&] {
    check_arg(sweep && count, "null argument");
    *count = sweep->result.points.size();
  });
}

cmag_status cmag_sweep_get_point(const cmag_sweep* sweep, size_t i, cmag_sweep_point* out) {
  return guarded([&] {
    check_arg(sweep && out, "null argument");
    check_arg(i < sweep->result.points.size(), "point index out of range");
    const auto& p = sweep->result.points[i];
    *out = {p.m, p.trials, p.successes, p.p_suc, p.mean_failure_msqe, p.median_recovery_error};
  });
}

cmag_status cmag_sweep_record_count(const cmag_sweep* sweep, size_t* count) {
  return guarded([&] {
    check_arg(sweep && count, "null argument");
    *count = sweep->result.records.size();
  });
}

cmag_status cmag_sweep_get_record(const cmag_sweep* sweep, size_t i, cmag_trial_record* out) {
  return guarded([&] {
    check_arg(sweep && out, "null argument");
    check_arg(i < sweep->result.records.size(), "record index out of range");
    to_record(sweep->result.records[i], out);
  });
}

cmag_status cmag_sweep_write(const cmag_sweep* sweep, const char* path, int as_json) {
  return guarded([&] {
    check_arg(sweep && path, "null argument");
    save_sweep(path, sweep->result, as_json != 0);
  });
}

void cmag_sweep_free(cmag_sweep* sweep) { delete sweep; }

cmag_status cmag_trial_run(const cmag_experiment_config* cfg, size_t m, int trial_index, cmag_trial_record* out,
                           const char* rec_path, const char* truth_path) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    check_arg(trial_index >= 0, "trial index must be >= 0");
    auto c = to_config(cfg);
    c.m_values = {m};
    validate(c);
    TrialDump dump;
    const bool want = rec_path || truth_path;
    const auto rec = run_trial(trial_seed(c, m, trial_index), m, c, want ? &dump : nullptr);
    if (want && !rec.failure.empty() && dump.t.empty()) fail(ErrorCode::numeric, "trial failed: " + rec.failure);
    if (rec_path) save_series(rec_path, dump.t, dump.B_rec);
    if (truth_path) save_series(truth_path, dump.t, dump.B_sim);
    to_record(rec, out);
  });
}

cmag_status cmag_trial_field(const cmag_experiment_config* cfg, size_t m, int trial_index, cmag_field** out) {
  return guarded([&] {
    check_arg(out != nullptr, "out is null");
    check_arg(trial_index >= 0, "trial index must be >= 0");
    auto c = to_config(cfg);
    c.m_values = {m};
    validate(c);
    require(c.scenario != Scenario::noisy, ErrorCode::unsupported, "noisy trials draw sparse vectors, not fields");
    *out = new cmag_field{trial_field(trial_seed(c, m, trial_index), c)};
  });
}

cmag_status cmag_quadrature_check(const cmag_field* field, int N, size_t m, uint64_t seed, int walsh_pipeline,
                                  double* gap, double* bound) {
  return guarded([&] {
    check_arg(field != nullptr, "field is null");
    const auto* tones = std::get_if<MultiToneField>(&field->model);
    require(tones != nullptr, ErrorCode::unsupported, "quadrature check needs a multitone field");
    require(N >= 1 && N <= 20, ErrorCode::configuration, "N must be in 1..20");
    const std::size_t n = std::size_t{1} << N;
    require(m >= 1 && m <= n, ErrorCode::configuration, "m must be in 1..2^N");
    std::vector<ControlSequence> seqs;
    Pipeline pipeline = Pipeline::random;
    if (walsh_pipeline) {
      pipeline = Pipeline::walsh;
      for (std::size_t k : sample_measurement_indices(seed, m, n)) seqs.push_back(walsh_control_sequence(k, N, tones->T));
    } else {
      seqs = random_control_sequences(seed, m, n, tones->T);
    }
    const auto rep = quadrature_gap(*tones, seqs, N, pipeline);
    if (gap) *gap = rep.gap;
    if (bound) *bound = rep.bound;
    require(rep.within_bound, ErrorCode::check_failure,
            "quadrature gap " + format_double(rep.gap) + " exceeds bound " + format_double(rep.bound) +
                "; worst sequence #" + std::to_string(rep.worst_sequence));
  });
}

cmag_status cmag_reconstruct(const cmag_field* field, const cmag_matrix* G, cmag_basis psi, double epsilon,
                             const char* out_path, double* msqe_out) {
  return guarded([&] {
    check_arg(field && G, "null argument");
    const int N = order_of(G->A.n());
    const auto d = discretize(field->model, N);
    const Eigen::VectorXd B = Eigen::Map<const Eigen::VectorXd>(d.B.data(), static_cast<Eigen::Index>(d.B.size()));
    const Eigen::VectorXd y = G->A.A * B;
    const auto basis = make_basis(to_label(psi), N);
    const auto A = basis.label() == BasisLabel::spike ? G->A : compose_with_basis(G->A, basis);
    const auto r = solve({A, y, epsilon});
    require(r.converged, ErrorCode::numeric, "l1 solver did not converge");
    const Eigen::VectorXd B_rec = basis.columns() * r.x_star;
    if (out_path) save_series(out_path, d.s, std::vector<double>(B_rec.data(), B_rec.data() + B_rec.size()));
    if (msqe_out) *msqe_out = msqe(B, B_rec, d.T / 1e-3);
  });
}

}  // extern "C"
