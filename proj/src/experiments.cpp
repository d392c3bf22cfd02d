// SPDX-License-Identifier: Apache-2.0

#include "cmag/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "cmag/error.hpp"
#include "cmag/random.hpp"
#include "cmag/walsh.hpp"

namespace cmag {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

const OrthonormalBasis& cached_basis(BasisLabel label, int N) {
  static std::mutex mu;
  static std::map<std::pair<BasisLabel, int>, std::unique_ptr<const OrthonormalBasis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{label, N}];
  if (!slot) slot = std::make_unique<const OrthonormalBasis>(make_basis(label, N));
  return *slot;
}

std::vector<std::size_t> m_range(std::size_t lo, std::size_t hi, std::size_t step) {
  std::vector<std::size_t> out;
  for (std::size_t m = lo; m <= hi; m += step) out.push_back(m);
  return out;
}

VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size())); }

// y_k = scale * (1/T) int kappa_k b dt, either exactly or through the shot-noise
// sensor path. Returns the noise radius of the sensor path (0 when noiseless).
double sense(const std::vector<double>& cells, const std::vector<ControlSequence>& seqs, double scale,
             const ExperimentConfig& cfg, std::uint64_t seed, VectorXd& y) {
  const std::size_t m = seqs.size();
  y.resize(static_cast<Index>(m));
  std::vector<MeasurementOutcome> outcomes;
  outcomes.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto mod = modulation_from_bits(seqs[k]);
    const double phase = accumulated_phase(cells, mod);
    if (cfg.n_reps == 0 && cfg.noise.terms.empty()) {
      y(static_cast<Index>(k)) = scale * phase / cfg.T;
      continue;
    }
    const double v = cfg.noise.terms.empty() ? 1.0 : chi(cfg.noise, seqs[k]).v;
    outcomes.push_back(simulate_outcome(phase, v, cfg.T, cfg.n_reps, derive_seed({seed, k})));
    y(static_cast<Index>(k)) = scale * outcomes.back().z_hat;
  }
  if (outcomes.empty()) return 0.0;
  return scale * measurement_noise_norm(outcomes, cfg.T);
}

std::vector<double> cell_averages(const FieldModel& field, std::size_t n, double T) {
  auto cells = exact_cell_integrals(field, n);
  for (auto& c : cells) c *= static_cast<double>(n) / T;
  return cells;
}

RecoveryResult recover(const SensingMatrix& A, const VectorXd& y, double eps, const SolverOptions& opts) {
  return eps > 0.0 ? bpdn(A, y, eps, opts) : basis_pursuit(A, y, opts);
}

void fill_record(TrialRecord& rec, const RecoveryResult& r, const VectorXd& x0, const VectorXd& B_sim,
                 const VectorXd& B_rec, double eps, const ExperimentConfig& cfg) {
  rec.iterations = r.iterations;
  rec.converged = r.converged;
  rec.polished = r.polished;
  rec.duality_gap = r.duality_gap_estimate;
  rec.l1_value = r.l1_value;
  rec.residual_norm = r.residual_norm;
  rec.epsilon = eps;
  rec.recovery_error = (r.x_star - x0).norm();
  rec.msqe = msqe(B_sim, B_rec, cfg.T / cfg.msqe_time_unit);
  rec.success = r.converged && rec.msqe < cfg.msqe_threshold;
}

void fill_dump(TrialDump* dump, const VectorXd& B_sim, const VectorXd& B_rec, double T) {
  if (!dump) return;
  const auto n = static_cast<std::size_t>(B_sim.size());
  dump->t.resize(n);
  dump->B_sim.assign(B_sim.data(), B_sim.data() + n);
  dump->B_rec.assign(B_rec.data(), B_rec.data() + n);
  for (std::size_t j = 0; j < n; ++j) dump->t[j] = cell_midpoint(j, n, T);
}

void require_scenario(const ExperimentConfig& cfg, Scenario s) {
  require(cfg.scenario == s, ErrorCode::configuration,
          "trial runner for " + to_string(s) + " called with scenario " + to_string(cfg.scenario));
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::walsh_spike: return "walsh_spike";
    case Scenario::random_multitone: return "random_multitone";
    case Scenario::random_spike: return "random_spike";
    case Scenario::quadrature_gap: return "quadrature_gap";
    case Scenario::noisy: return "noisy";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "walsh_spike") return Scenario::walsh_spike;
  if (s == "random_multitone") return Scenario::random_multitone;
  if (s == "random_spike") return Scenario::random_spike;
  if (s == "quadrature_gap") return Scenario::quadrature_gap;
  if (s == "noisy") return Scenario::noisy;
  fail(ErrorCode::configuration, "unknown scenario '" + s + "'");
}

ExperimentConfig default_config(Scenario s) {
  ExperimentConfig cfg;
  cfg.scenario = s;
  switch (s) {
    case Scenario::walsh_spike:
      cfg.m_values = m_range(200, 300, 10);
      cfg.msqe_threshold = 1e-9;
      break;
    case Scenario::random_multitone:
      cfg.m_values = m_range(250, 350, 10);
      cfg.msqe_threshold = 0.005;
      break;
    case Scenario::random_spike:
      cfg.m_values = m_range(150, 300, 25);
      cfg.msqe_threshold = 1e-9;
      break;
    case Scenario::quadrature_gap:
      cfg.m_values = {250};
      cfg.trials = 50;
      cfg.msqe_threshold = 1.0;  // records hold gap / bound
      break;
    case Scenario::noisy:
      cfg.N = 8;
      cfg.m_values = {128};
      cfg.trials = 100;
      cfg.msqe_threshold = 1e-2;
      cfg.noise_sigma = 0.01;
      break;
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.N >= 1 && cfg.N <= DiscreteWalshBasis::kMaxDenseOrder, ErrorCode::configuration,
          "N must lie in [1, 13]");
  require(cfg.T > 0.0 && std::isfinite(cfg.T), ErrorCode::configuration, "T must be positive");
  const std::size_t n = std::size_t{1} << cfg.N;
  require(!cfg.m_values.empty(), ErrorCode::configuration, "at least one m value is required");
  for (std::size_t m : cfg.m_values) {
    require(m >= 1 && m <= n, ErrorCode::configuration, "every m must satisfy 1 <= m <= 2^N");
  }
  require(cfg.trials >= 1, ErrorCode::configuration, "trials must be >= 1");
  require(cfg.msqe_threshold > 0.0, ErrorCode::configuration, "threshold must be > 0");
  require(cfg.msqe_time_unit > 0.0, ErrorCode::configuration, "MSQE time unit must be > 0");
  require(cfg.noise_sigma >= 0.0 && std::isfinite(cfg.noise_sigma), ErrorCode::configuration, "sigma must be >= 0");
  require(cfg.noise_margin >= 0.0, ErrorCode::configuration, "noise margin must be >= 0");
  require(cfg.spike_events >= 0, ErrorCode::configuration, "spike event count must be >= 0");
  require(cfg.tones >= 1, ErrorCode::configuration, "need at least one tone");
  require(cfg.noisy_sparsity >= 1 && static_cast<std::size_t>(cfg.noisy_sparsity) <= n, ErrorCode::configuration,
          "noisy sparsity must lie in [1, 2^N]");
  for (int k : cfg.fixed_reciprocals) require(k >= 1, ErrorCode::configuration, "reciprocal index must be >= 1");
  cfg.noise.validate();
}

double msqe(const VectorXd& B_sim, const VectorXd& B_rec, double T) {
  require(B_sim.size() == B_rec.size() && B_sim.size() > 0, ErrorCode::domain, "MSQE needs equal, non-empty lengths");
  return T / static_cast<double>(B_sim.size()) * (B_sim - B_rec).squaredNorm();
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t m, int trial) {
  return derive_seed({cfg.master_seed, static_cast<std::uint64_t>(cfg.scenario), m, static_cast<std::uint64_t>(trial)});
}

FieldModel trial_field(std::uint64_t seed, const ExperimentConfig& cfg) {
  const std::size_t n = std::size_t{1} << cfg.N;
  const std::uint64_t s = derive_seed({seed, 1});
  switch (cfg.scenario) {
    case Scenario::random_multitone:
    case Scenario::quadrature_gap:
      if (!cfg.fixed_reciprocals.empty()) return multitone_with_reciprocals(s, cfg.fixed_reciprocals, n, cfg.T);
      return sample_multitone(s, cfg.tones, n, cfg.T);
    case Scenario::walsh_spike:
    case Scenario::random_spike:
    case Scenario::noisy:
      return sample_spike_train(s, cfg.T, cfg.spike_events, cfg.spike_half_width, cfg.spike_amplitude, cfg.N);
  }
  fail(ErrorCode::configuration, "unknown scenario");
}

TrialRecord run_walsh_spike_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg, TrialDump* dump) {
  require_scenario(cfg, Scenario::walsh_spike);
  const std::size_t n = std::size_t{1} << cfg.N;
  TrialRecord rec;
  rec.seed = seed;
  rec.m = m;
  const FieldModel field = trial_field(seed, cfg);
  const VectorXd B = to_vector(discretize(field, cfg.N).B);
  const auto cells = exact_cell_integrals(field, n);
  const auto M = sample_measurement_indices(derive_seed({seed, 2}), m, n);

  std::vector<ControlSequence> seqs;
  seqs.reserve(m);
  for (std::size_t k : M) seqs.push_back(walsh_control_sequence(k, cfg.N, cfg.T));
  VectorXd y;
  const double eps = sense(cells, seqs, std::sqrt(static_cast<double>(n)), cfg, derive_seed({seed, 3}), y);

  const SensingMatrix A =
      subsample_rows(cached_basis(BasisLabel::walsh_sequency, cfg.N), cached_basis(BasisLabel::spike, cfg.N), M);
  const auto r = recover(A, y, eps, cfg.solver);
  fill_record(rec, r, B, B, r.x_star, eps, cfg);
  fill_dump(dump, B, r.x_star, cfg.T);
  return rec;
}

TrialRecord run_random_multitone_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg,
                                       TrialDump* dump) {
  require_scenario(cfg, Scenario::random_multitone);
  const std::size_t n = std::size_t{1} << cfg.N;
  TrialRecord rec;
  rec.seed = seed;
  rec.m = m;
  const FieldModel field = trial_field(seed, cfg);
  const VectorXd B = to_vector(discretize(field, cfg.N).B);
  const std::uint64_t gseed = derive_seed({seed, 2});
  const SensingMatrix G = random_control_matrix(gseed, m, n, cfg.T);
  const OrthonormalBasis& psi = cached_basis(cfg.multitone_basis, cfg.N);
  const SensingMatrix A = compose_with_basis(G, psi);

  VectorXd y;
  double eps = 0.0;
  if (cfg.multitone_exact_integrals || cfg.n_reps > 0 || !cfg.noise.terms.empty()) {
    const auto cells = exact_cell_integrals(field, n);
    const double scale = static_cast<double>(n) / std::sqrt(static_cast<double>(m));
    eps = sense(cells, random_control_sequences(gseed, m, n, cfg.T), scale, cfg, derive_seed({seed, 3}), y);
    const double dn = static_cast<double>(n);
    eps += cfg.T * cfg.T * std::sqrt(static_cast<double>(m)) / (24.0 * dn) * second_derivative_bound(field);
  } else {
    y = G.A * B;  // midpoint quadrature of the sensor integrals
  }
  const auto r = recover(A, y, eps, cfg.solver);
  const VectorXd B_rec = psi.columns() * r.x_star;
  fill_record(rec, r, psi.columns().transpose() * B, B, B_rec, eps, cfg);
  fill_dump(dump, B, B_rec, cfg.T);
  return rec;
}

TrialRecord run_random_spike_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg, TrialDump* dump) {
  require_scenario(cfg, Scenario::random_spike);
  const std::size_t n = std::size_t{1} << cfg.N;
  TrialRecord rec;
  rec.seed = seed;
  rec.m = m;
  const FieldModel field = trial_field(seed, cfg);
  const VectorXd B = to_vector(discretize(field, cfg.N).B);
  const std::uint64_t gseed = derive_seed({seed, 2});
  const SensingMatrix A = random_control_matrix(gseed, m, n, cfg.T);

  VectorXd y;
  double eps = 0.0;
  if (cfg.n_reps > 0 || !cfg.noise.terms.empty()) {
    const auto cells = exact_cell_integrals(field, n);
    const double scale = static_cast<double>(n) / std::sqrt(static_cast<double>(m));
    eps = sense(cells, random_control_sequences(gseed, m, n, cfg.T), scale, cfg, derive_seed({seed, 3}), y);
  } else {
    y = A.A * to_vector(cell_averages(field, n, cfg.T));
  }
  const auto r = recover(A, y, eps, cfg.solver);
  fill_record(rec, r, B, B, r.x_star, eps, cfg);
  fill_dump(dump, B, r.x_star, cfg.T);
  return rec;
}

TrialRecord run_noisy_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg, TrialDump* dump) {
  require_scenario(cfg, Scenario::noisy);
  const std::size_t n = std::size_t{1} << cfg.N;
  TrialRecord rec;
  rec.seed = seed;
  rec.m = m;
  // exactly sparse instance with standard-normal entries scaled by the spike amplitude
  VectorXd x0 = VectorXd::Zero(static_cast<Index>(n));
  {
    auto eng = make_engine(derive_seed({seed, 1}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto support = sample_measurement_indices(derive_seed({seed, 4}), cfg.noisy_sparsity, n);
    for (std::size_t j : support) x0(static_cast<Index>(j)) = cfg.spike_amplitude * gauss(eng);
  }
  const SensingMatrix A = random_matrix(RandomEnsemble::bernoulli, derive_seed({seed, 2}), m, n);
  VectorXd y = A.A * x0;
  {
    auto eng = make_engine(derive_seed({seed, 3}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index i = 0; i < y.size(); ++i) {
      const double e = gauss(eng);
      if (cfg.noise_sigma > 0.0) y(i) += cfg.noise_sigma * e;
    }
  }
  const double eps = cfg.noise_sigma * std::sqrt(static_cast<double>(m)) * (1.0 + cfg.noise_margin);
  const auto r = recover(A, y, eps, cfg.solver);
  fill_record(rec, r, x0, x0, r.x_star, eps, cfg);
  fill_dump(dump, x0, r.x_star, cfg.T);
  return rec;
}

std::vector<ControlSequence> random_control_sequences(std::uint64_t seed, std::size_t m, std::size_t n, double T) {
  std::vector<ControlSequence> out;
  out.reserve(m);
  // same per-row seeds as random_control_matrix
  for (std::size_t i = 0; i < m; ++i) out.push_back(random_control_sequence(derive_seed({seed, i}), n, T));
  return out;
}

QuadratureGapReport quadrature_gap(const MultiToneField& field, const std::vector<ControlSequence>& sequences, int N,
                                   Pipeline pipeline) {
  require(N >= 0 && N <= 30, ErrorCode::domain, "order out of range");
  require(!sequences.empty(), ErrorCode::domain, "need at least one control sequence");
  const std::size_t n = std::size_t{1} << N;
  const double T = field.T;
  const auto m = static_cast<double>(sequences.size());
  const double dn = static_cast<double>(n);
  const auto cells = exact_cell_integrals(FieldModel{field}, n);
  const auto B = discretize(FieldModel{field}, N).B;
  // y = cy * int kappa b, z = cz * sum kappa B_j
  const double cy = pipeline == Pipeline::walsh ? std::sqrt(dn) / T : dn / (T * std::sqrt(m));
  const double cz = pipeline == Pipeline::walsh ? 1.0 / std::sqrt(dn) : 1.0 / std::sqrt(m);

  QuadratureGapReport rep;
  double acc = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < sequences.size(); ++k) {
    require(sequences[k].n() == n, ErrorCode::domain, "control sequence length must be 2^N");
    const auto mod = modulation_from_bits(sequences[k]);
    double yi = 0.0, zi = 0.0, mag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yi += mod.kappa[j] * cells[j];
      zi += mod.kappa[j] * B[j];
      mag += cy * std::abs(cells[j]) + cz * std::abs(B[j]);
    }
    scale += mag * mag;
    const double g = std::abs(cy * yi - cz * zi);
    acc += g * g;
    if (g > rep.worst_entry_gap) {
      rep.worst_entry_gap = g;
      rep.worst_sequence = k;
    }
  }
  rep.gap = std::sqrt(acc);
  const double b2 = second_derivative_bound(FieldModel{field});
  rep.bound = pipeline == Pipeline::walsh ? std::sqrt(m) * T * T / (24.0 * std::pow(dn, 1.5)) * b2
                                          : T * T * std::sqrt(m) / (24.0 * dn) * b2;
  // summation rounding, so an exactly integrated field is not failed
  const double slack = dn * std::numeric_limits<double>::epsilon() * std::sqrt(scale);
  rep.within_bound = rep.gap <= rep.bound + slack;
  return rep;
}

QuadratureGapReport quadrature_gap_check(const MultiToneField& field, const std::vector<ControlSequence>& sequences,
                                         int N, Pipeline pipeline) {
  auto rep = quadrature_gap(field, sequences, N, pipeline);
  require(rep.within_bound, ErrorCode::check_failure,
          "quadrature gap " + std::to_string(rep.gap) + " exceeds bound " + std::to_string(rep.bound) +
              "; worst sequence #" + std::to_string(rep.worst_sequence));
  return rep;
}

namespace {

TrialRecord run_quadrature_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg) {
  const std::size_t n = std::size_t{1} << cfg.N;
  TrialRecord rec;
  rec.seed = seed;
  rec.m = m;
  const auto field = std::get<MultiToneField>(trial_field(seed, cfg));
  const auto random = quadrature_gap(field, random_control_sequences(derive_seed({seed, 2}), m, n, cfg.T), cfg.N,
                                     Pipeline::random);
  std::vector<ControlSequence> walsh;
  for (std::size_t k : sample_measurement_indices(derive_seed({seed, 3}), m, n)) {
    walsh.push_back(walsh_control_sequence(k, cfg.N, cfg.T));
  }
  const auto w = quadrature_gap(field, walsh, cfg.N, Pipeline::walsh);
  auto ratio = [](const QuadratureGapReport& r) { return r.bound > 0.0 ? r.gap / r.bound : (r.gap > 0.0 ? 2.0 : 0.0); };
  rec.residual_norm = random.gap;
  rec.epsilon = random.bound;
  rec.msqe = std::max(ratio(random), ratio(w));
  rec.converged = true;
  rec.success = random.within_bound && w.within_bound;
  return rec;
}

}  // namespace

TrialRecord run_trial(std::uint64_t seed, std::size_t m, const ExperimentConfig& cfg, TrialDump* dump) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialRecord rec;
  try {
    switch (cfg.scenario) {
      case Scenario::walsh_spike: rec = run_walsh_spike_trial(seed, m, cfg, dump); break;
      case Scenario::random_multitone: rec = run_random_multitone_trial(seed, m, cfg, dump); break;
      case Scenario::random_spike: rec = run_random_spike_trial(seed, m, cfg, dump); break;
      case Scenario::quadrature_gap: rec = run_quadrature_trial(seed, m, cfg); break;
      case Scenario::noisy: rec = run_noisy_trial(seed, m, cfg, dump); break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::configuration || e.code() == ErrorCode::resource) throw;
    rec = TrialRecord{};
    rec.seed = seed;
    rec.m = m;
    rec.msqe = std::numeric_limits<double>::infinity();
    rec.success = false;
    rec.failure = e.what();
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  SweepResult out;
  out.config = cfg;
  const auto trials = static_cast<std::size_t>(cfg.trials);
  const std::size_t total = cfg.m_values.size() * trials;
  out.records.resize(total);

  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t m = cfg.m_values[i / trials];
      const int t = static_cast<int>(i % trials);
      out.records[i] = run_trial(trial_seed(cfg, m, t), m, cfg);
    }
  };
  unsigned threads = cfg.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  if (threads <= 1) {
    work(0, total);
  } else {
    // interleaved blocks keep the expensive large-m trials spread over workers
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < threads; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < total; i += threads) work(i, i + 1);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  for (std::size_t k = 0; k < cfg.m_values.size(); ++k) {
    SweepPoint p;
    p.m = cfg.m_values[k];
    p.trials = cfg.trials;
    double fail_sum = 0.0;
    int finite_failures = 0;
    std::vector<double> errs;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& r = out.records[k * trials + t];
      if (r.success) ++p.successes;
      else if (std::isfinite(r.msqe)) {
        fail_sum += r.msqe;
        ++finite_failures;
      }
      if (std::isfinite(r.recovery_error)) errs.push_back(r.recovery_error);
    }
    p.p_suc = static_cast<double>(p.successes) / static_cast<double>(p.trials);
    p.mean_failure_msqe = finite_failures ? fail_sum / finite_failures : 0.0;
    if (!errs.empty()) {
      std::sort(errs.begin(), errs.end());
      const std::size_t h = errs.size() / 2;
      p.median_recovery_error = errs.size() % 2 ? errs[h] : 0.5 * (errs[h - 1] + errs[h]);
    }
    out.points.push_back(p);
  }
  return out;
}

SweepResult noisy_run(ExperimentConfig cfg, double sigma) {
  require(sigma >= 0.0, ErrorCode::configuration, "sigma must be >= 0");
  cfg.scenario = Scenario::noisy;
  cfg.noise_sigma = sigma;
  return run_sweep(cfg);
}

}  // namespace cmag
