// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo harness: Walsh- and Bernoulli-measured spike trains,
// Bernoulli-measured multitone fields, quadrature-gap checks and noisy runs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmag/l1_recovery.hpp"
#include "cmag/sensing_matrix.hpp"
#include "cmag/sensor_sim.hpp"
#include "cmag/signal_models.hpp"

namespace cmag {

inline constexpr int kFormatVersion = 1;

enum class Scenario { walsh_spike, random_multitone, random_spike, quadrature_gap, noisy };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::walsh_spike;
  int N = 10;
  double T = 1e-3;  // s
  std::vector<std::size_t> m_values;
  int trials = 200;
  double msqe_threshold = 1e-9;
  // MSQE is (T/n) sum dB^2 with T counted in this unit (seconds per unit).
  // 1e-3 reports (nT)^2 ms.
  double msqe_time_unit = 1e-3;
  std::uint64_t master_seed = 1;
  SolverOptions solver;
  NoiseModel noise;             // dephasing spectrum; empty means v = 1
  std::uint64_t n_reps = 0;     // shots per measurement, 0 = analytic probabilities
  double noise_sigma = 0.0;     // gaussian noise added to y (noisy scenario)
  double noise_margin = 0.1;    // eps = sigma sqrt(m) (1 + margin)
  unsigned threads = 1;         // 0 = hardware concurrency
  bool record_timing = false;   // wall times are left out of serialized output unless set

  // spike trains
  int spike_events = 5;
  double spike_half_width = 5e-6;  // s
  double spike_amplitude = 1.0;    // nT
  int noisy_sparsity = 8;          // nonzeros per instance in the noisy scenario

  // multitone fields
  int tones = 8;
  std::vector<int> fixed_reciprocals;  // non-empty pins x_j = 1/k_j
  BasisLabel multitone_basis = BasisLabel::dct;
  bool multitone_exact_integrals = false;  // y from the exact integrals, eps from the quadrature bound
};

/// Standard parameters for a scenario: N = 10, T = 1 ms and the scenario's m grid
/// and threshold.
ExperimentConfig default_config(Scenario s);

/// Throws configuration error on m > 2^N, trials < 1, threshold <= 0 and the like.
void validate(const ExperimentConfig& cfg);

struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t m = 0;
  double msqe = 0.0;
  bool success = false;
  int iterations = 0;
  bool converged = false;
  bool polished = false;
  double duality_gap = 0.0;
  double l1_value = 0.0;
  double residual_norm = 0.0;
  double epsilon = 0.0;
  double recovery_error = 0.0;  // |x* - x0|_2 in the sparse basis
  double wall_time = 0.0;       // s
  std::string failure;          // set when the trial threw
};

struct SweepPoint {
  std::size_t m = 0;
  int trials = 0;
  int successes = 0;
  double p_suc = 0.0;
  double mean_failure_msqe = 0.0;  // 0 when every trial succeeded
  double median_recovery_error = 0.0;
};

struct SweepResult {
  int format_version = kFormatVersion;
  ExperimentConfig config;
  std::vector<SweepPoint> points;
  std::vector<TrialRecord> records;  // grouped by m, trial order within
};

/// (T/n) sum_j (B_sim,j - B_rec,j)^2.
double msqe(const Eigen::VectorXd& B_sim, const Eigen::VectorXd& B_rec, double T);

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t m, int trial);

/// Optional reconstruction output for a single trial.
struct TrialDump {
  std::vector<double> t;
  std::vector<double> B_sim;
  std::vector<double> B_rec;
};

TrialRecord run_walsh_spike_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg,
                                  TrialDump* dump = nullptr);
TrialRecord run_random_multitone_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg,
                                       TrialDump* dump = nullptr);
TrialRecord run_random_spike_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg,
                                   TrialDump* dump = nullptr);
TrialRecord run_noisy_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg,
                            TrialDump* dump = nullptr);

/// Dispatches on cfg.scenario. Solver and domain errors become failed records.
TrialRecord run_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg, TrialDump* dump = nullptr);

enum class Pipeline { walsh, random };

/// The m control sequences behind random_control_matrix(seed, m, n, T).
std::vector<ControlSequence> random_control_sequences(std::uint64_t seed, std::size_t m, std::size_t n, double T);

struct QuadratureGapReport {
  double gap = 0.0;        // |y - z|_2
  double bound = 0.0;
  bool within_bound = true;
  std::size_t worst_sequence = 0;  // largest per-entry gap
  double worst_entry_gap = 0.0;
};

/// Continuous measurements (exact integrals) against discrete inner products
/// with the midpoint samples, for m = sequences.size() control sequences.
/// Walsh pipelines use y_k = sqrt(n) bhat_k and the bound
/// sqrt(m) T^2 / (24 n^{3/2}) max|b''|; random pipelines use
/// y_u = n / (T sqrt(m)) int kappa_u b and the bound T^2 sqrt(m) / (24 n) max|b''|.
QuadratureGapReport quadrature_gap(const MultiToneField& field, const std::vector<ControlSequence>& sequences,
                                   int N, Pipeline pipeline);

/// As quadrature_gap, throwing check_failure that names the worst sequence
/// when the bound is violated.
QuadratureGapReport quadrature_gap_check(const MultiToneField& field, const std::vector<ControlSequence>& sequences,
                                         int N, Pipeline pipeline);

/// Deterministic for a fixed master seed whatever the thread count.
SweepResult run_sweep(const ExperimentConfig& cfg);

/// run_sweep on the noisy scenario with the given sigma.
SweepResult noisy_run(ExperimentConfig cfg, double sigma);

/// Fields and matrices the trials draw, exposed so tests and the CLI can
/// replay a trial.
FieldModel trial_field(std::uint64_t seed, const ExperimentConfig& cfg);

}  // namespace cmag
