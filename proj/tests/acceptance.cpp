// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 4 9        selected criteria
//   acceptance --full     1000 trials per sweep point
//   acceptance --calibrate-noise   recompute the noise constant

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmag/error.hpp"
#include "cmag/experiments.hpp"
#include "cmag/l1_recovery.hpp"
#include "cmag/random.hpp"
#include "cmag/sensing_matrix.hpp"
#include "cmag/sensor_sim.hpp"
#include "cmag/signal_models.hpp"
#include "cmag/walsh.hpp"

using namespace cmag;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool g_full = false;

int sweep_trials() { return g_full ? 1000 : 200; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const SweepPoint& point_at(const SweepResult& r, std::size_t m) {
  return *std::find_if(r.points.begin(), r.points.end(), [m](const SweepPoint& p) { return p.m == m; });
}

// 1: walsh-measured spike trains
Outcome table1() {
  auto cfg = default_config(Scenario::walsh_spike);
  cfg.m_values = {200, 250, 300};
  cfg.trials = sweep_trials();
  cfg.threads = 0;
  const auto r = run_sweep(cfg);
  const double p200 = point_at(r, 200).p_suc, p250 = point_at(r, 250).p_suc, p300 = point_at(r, 300).p_suc;
  const bool ok = p200 >= 0.80 && p200 <= 0.93 && p250 >= 0.98 && p300 >= 0.995;
  return {ok, fmt("p_suc(200)=%.3f in [0.80,0.93], p_suc(250)=%.3f >= 0.98, p_suc(300)=%.3f >= 0.995, %d trials",
                  p200, p250, p300, cfg.trials)};
}

// 2: bernoulli-measured multitone fields
Outcome table3() {
  auto cfg = default_config(Scenario::random_multitone);
  cfg.m_values = {250, 320};
  cfg.trials = sweep_trials();
  cfg.threads = 0;
  const auto r = run_sweep(cfg);
  const double p250 = point_at(r, 250).p_suc, p320 = point_at(r, 320).p_suc;
  const bool ok = p250 >= 0.85 && p250 <= 0.96 && p320 >= 0.99;
  return {ok, fmt("p_suc(250)=%.3f in [0.85,0.96], p_suc(320)=%.3f >= 0.99, %d trials", p250, p320, cfg.trials)};
}

// 3: fixed frequency set at m = 250
Outcome fixture() {
  auto cfg = default_config(Scenario::random_multitone);
  cfg.fixed_reciprocals = {2, 61, 78, 328, 551, 788, 881, 1022};
  cfg.m_values = {250};
  cfg.trials = 100;
  cfg.threads = 0;
  const auto r = run_sweep(cfg);
  int good = 0;
  std::vector<double> ms;
  for (const auto& t : r.records) {
    good += t.msqe <= 0.005;
    ms.push_back(t.msqe);
  }
  std::sort(ms.begin(), ms.end());
  return {good >= 90, fmt("%d/100 seeds with MSQE <= 0.005 (need 90), median MSQE %.4g", good, ms[50])};
}

// 4: spike / walsh coherence
Outcome incoherence() {
  double worst = 0.0;
  for (int N = 0; N <= 10; ++N) {
    const auto n = std::size_t{1} << N;
    worst = std::max(worst, std::abs(coherence(OrthonormalBasis::spike(n), OrthonormalBasis::walsh(N)) - 1.0));
  }
  return {worst <= 1e-12, fmt("max |mu - 1| over N=0..10 is %.3g (tol 1e-12)", worst)};
}

// 5: homotopy against the dense simplex
Outcome solver_oracle() {
  int mismatches = 0, solved = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto eng = make_engine(derive_seed({505, i}));
    const auto n = static_cast<std::size_t>(uniform_int(eng, 4, 16));
    const auto m = static_cast<std::size_t>(uniform_int(eng, 2, n - 1));
    const auto S = static_cast<std::size_t>(uniform_int(eng, 1, m));
    const auto kind = i % 3 == 0 ? RandomEnsemble::bernoulli : RandomEnsemble::gaussian;
    const auto A = random_matrix(kind, derive_seed({506, i}), m, n);
    VectorXd x = VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::normal_distribution<double> g;
    for (std::size_t j : sample_measurement_indices(derive_seed({507, i}), S, n)) x(static_cast<Eigen::Index>(j)) = g(eng);
    const VectorXd y = A.A * x;
    const auto r = basis_pursuit(A, y);
    const auto o = lp_oracle(A.A, y);
    const double rel = std::abs(r.l1_value - o.objective) / std::max(o.objective, 1e-300);
    worst = std::max(worst, rel);
    solved += r.converged;
    mismatches += !(r.converged && rel <= 1e-6);
  }
  return {mismatches == 0,
          fmt("%d mismatches in 200 instances, worst relative l1 gap %.3g (tol 1e-6), %d certified", mismatches, worst,
              solved)};
}

double direct_ric(const MatrixXd& A, int S) {
  const auto n = static_cast<int>(A.cols());
  double lo = 1.0, hi = 1.0;
  std::vector<int> idx(static_cast<std::size_t>(S));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == S) {
      MatrixXd sub(A.rows(), S);
      for (int k = 0; k < S; ++k) sub.col(k) = A.col(idx[static_cast<std::size_t>(k)]);
      Eigen::JacobiSVD<MatrixXd> svd(sub);
      const auto& sv = svd.singularValues();
      // fewer rows than columns leaves a zero singular value
      const double smin = sub.rows() < S ? 0.0 : sv(sv.size() - 1);
      hi = std::max(hi, sv(0) * sv(0));
      lo = std::min(lo, smin * smin);
      return;
    }
    for (int c = start; c < n; ++c) {
      idx[static_cast<std::size_t>(depth)] = c;
      rec(c + 1, depth + 1);
    }
  };
  rec(0, 0);
  return std::max(hi - 1.0, 1.0 - lo);
}

// 6: restricted isometry constant by definition
Outcome rip_fidelity() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto eng = make_engine(derive_seed({606, i}));
    const auto n = static_cast<std::size_t>(uniform_int(eng, 6, 16));
    const auto m = static_cast<std::size_t>(uniform_int(eng, 3, n));
    const int S = static_cast<int>(uniform_int(eng, 1, 3));
    const auto kinds = {RandomEnsemble::gaussian, RandomEnsemble::bernoulli, RandomEnsemble::sphere_columns};
    const auto kind = *(kinds.begin() + i % 3);
    const auto A = random_matrix(kind, derive_seed({607, i}), m, n);
    worst = std::max(worst, std::abs(restricted_isometry_constant(A, S).delta_S - direct_ric(A.A, S)));
  }
  double ortho = 0.0;
  std::vector<MatrixXd> square = {MatrixXd::Identity(8, 8), MatrixXd::Identity(16, 16),
                                  OrthonormalBasis::walsh(2).columns(), OrthonormalBasis::walsh(4).columns()};
  MatrixXd perm = MatrixXd::Zero(12, 12);
  for (int j = 0; j < 12; ++j) perm((5 * j + 3) % 12, j) = -1.0 + 2.0 * (j % 2);
  square.push_back(perm);
  for (const auto& Q : square) {
    SensingMatrix s;
    s.A = Q;
    for (int S = 1; S <= 3; ++S) ortho = std::max(ortho, restricted_isometry_constant(s, S).delta_S);
  }
  return {worst <= 1e-8 && ortho == 0.0,
          fmt("max deviation from SVD recomputation %.3g (tol 1e-8) over 20 matrices; orthonormal delta_S = %.3g (need 0)",
              worst, ortho)};
}

// 7: midpoint quadrature bounds
Outcome quadrature() {
  int violations = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto f = sample_multitone(derive_seed({707, i}), 8, 1024, 1e-3);
    const auto rnd = quadrature_gap(f, random_control_sequences(derive_seed({708, i}), 250, 1024, f.T), 10,
                                    Pipeline::random);
    std::vector<ControlSequence> wal;
    for (std::size_t k : sample_measurement_indices(derive_seed({709, i}), 250, 1024))
      wal.push_back(walsh_control_sequence(k, 10, f.T));
    const auto w = quadrature_gap(f, wal, 10, Pipeline::walsh);
    for (const auto* r : {&rnd, &w}) {
      violations += !(r->gap <= r->bound);
      worst = std::max(worst, r->gap / r->bound);
    }
  }
  return {violations == 0, fmt("%d violations over 50 fields x 2 pipelines, worst gap/bound %.3g", violations, worst)};
}

// 8: noiseless sensor round trip
Outcome sensor_round_trip() {
  double worst_rel = 0.0, worst_abs = 0.0, max_phase = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto f = sample_multitone(derive_seed({808, i}), 8, 1024, 1e-3);
    const auto seq = random_control_sequence(derive_seed({809, i}), 1024, f.T);
    const auto mod = modulation_from_bits(seq);
    auto eng = make_engine(derive_seed({810, i}));
    // rescale so the phase covers [-1.5, 1.5]
    const double target = -1.5 + 3.0 * uniform01(eng);
    const double phi0 = accumulated_phase(exact_cell_integrals(FieldModel{f}, 1024), mod);
    for (auto& t : f.tones) t.amplitude *= std::abs(target / phi0);
    const double phi = accumulated_phase(exact_cell_integrals(FieldModel{f}, 1024), mod);
    const double truth = phi / f.T;
    const auto out = simulate_outcome(phi, 1.0, f.T, 0, i);
    const double err = std::abs(out.z_hat - truth);
    worst_abs = std::max(worst_abs, err);
    worst_rel = std::max(worst_rel, err / std::max(1.0, std::abs(truth)));
    max_phase = std::max(max_phase, std::abs(phi));
  }
  return {worst_rel <= 1e-12 && max_phase <= 1.5,
          fmt("worst relative error %.3g (tol 1e-12), absolute %.3g rad/s, max |phi| %.4f", worst_rel, worst_abs,
              max_phase)};
}

// 9: walsh basis and transform
Outcome walsh_engine() {
  double ortho = 0.0, fast = 0.0;
  int bad_changes = 0;
  std::mt19937_64 eng(909);
  std::normal_distribution<double> g;
  for (int N = 0; N <= 10; ++N) {
    const auto n = static_cast<Eigen::Index>(1) << N;
    for (auto ord : {WalshOrdering::sequency, WalshOrdering::paley}) {
      const auto M = discrete_walsh_matrix(N, ord);
      ortho = std::max(ortho, (M.rows() * M.rows().transpose() - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
      VectorXd v(n);
      for (auto& x : v) x = g(eng);
      const VectorXd dense = M.rows() * v;
      std::vector<double> c(static_cast<std::size_t>(n));
      walsh_forward(std::span<const double>(v.data(), static_cast<std::size_t>(n)), c, ord);
      for (Eigen::Index j = 0; j < n; ++j) fast = std::max(fast, std::abs(c[static_cast<std::size_t>(j)] - dense(j)));
    }
    if (N <= 8) {
      const auto M = discrete_walsh_matrix(N);
      for (Eigen::Index j = 0; j < n; ++j) {
        int changes = 0;
        for (Eigen::Index q = 1; q < n; ++q) changes += (M.rows()(j, q) > 0) != (M.rows()(j, q - 1) > 0);
        bad_changes += changes != j;
      }
    }
  }
  return {ortho <= 1e-12 && bad_changes == 0 && fast <= 1e-10,
          fmt("orthonormality %.3g (tol 1e-12), %d rows with wrong sign-change count, fast vs dense %.3g (tol 1e-10)",
              ortho, bad_changes, fast)};
}

// 10: bpdn error against the noise radius
constexpr double kFrozenNoiseConstant = 1.5;
constexpr std::uint64_t kCalibrationSeed = 1001;
constexpr std::uint64_t kRegressionSeed = 2002;

std::vector<double> noise_ratios(std::uint64_t base) {
  const Eigen::Index n = 256, m = 128;
  std::vector<double> out;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::uint64_t s = derive_seed({base, i});
    VectorXd x0 = VectorXd::Zero(n);
    auto eng = make_engine(derive_seed({s, 1}));
    std::normal_distribution<double> g;
    for (std::size_t j : sample_measurement_indices(derive_seed({s, 2}), 8, n)) x0(static_cast<Eigen::Index>(j)) = g(eng);
    const auto A = random_matrix(RandomEnsemble::bernoulli, derive_seed({s, 3}), m, n);
    const VectorXd y0 = A.A * x0;
    const double eps = 0.1 * y0.norm();
    // eps = sigma sqrt(m) (1 + 10% margin)
    const double sigma = eps / (std::sqrt(static_cast<double>(m)) * 1.1);
    auto noise = make_engine(derive_seed({s, 4}));
    VectorXd y = y0;
    for (Eigen::Index k = 0; k < m; ++k) y(k) += sigma * g(noise);
    const auto r = bpdn(A, y, eps);
    out.push_back(r.converged ? (r.x_star - x0).norm() / eps : std::numeric_limits<double>::infinity());
  }
  return out;
}

Outcome noise_robustness() {
  const auto ratios = noise_ratios(kRegressionSeed);
  const double worst = *std::max_element(ratios.begin(), ratios.end());
  return {worst <= kFrozenNoiseConstant && kFrozenNoiseConstant <= 10.0,
          fmt("max |x*-x0|/eps = %.3f over 100 instances against frozen C = %.2f (C <= 10)", worst,
              kFrozenNoiseConstant)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> which;
  bool calibrate = false;
  app.add_option("criteria", which, "criteria to run (default all)")->check(CLI::Range(1, 10));
  app.add_flag("--full", g_full, "1000 trials per sweep point");
  app.add_flag("--calibrate-noise", calibrate, "recompute the noise constant on the calibration seeds");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (calibrate) {
    auto r = noise_ratios(kCalibrationSeed);
    std::sort(r.begin(), r.end());
    std::printf("calibration: median %.3f, 95th %.3f, max %.3f; frozen C = %.2f\n", r[50], r[95], r.back(),
                kFrozenNoiseConstant);
    return 0;
  }
  const std::map<int, std::pair<const char*, Outcome (*)()>> all = {
      {1, {"walsh spike sweep", table1}},       {2, {"multitone sweep", table3}},
      {3, {"fixed-frequency fixture", fixture}}, {4, {"spike/walsh incoherence", incoherence}},
      {5, {"solver vs simplex", solver_oracle}}, {6, {"restricted isometry", rip_fidelity}},
      {7, {"quadrature bounds", quadrature}},   {8, {"sensor round trip", sensor_round_trip}},
      {9, {"walsh engine", walsh_engine}},      {10, {"noise robustness", noise_robustness}},
  };
  if (which.empty())
    for (const auto& [k, v] : all) which.push_back(k);
  int failed = 0;
  for (int k : which) {
    const auto& [name, fn] = all.at(k);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s  [%.1fs]\n", k, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 2 : 0;
}
