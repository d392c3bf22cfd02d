// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cmag/error.hpp"
#include "cmag/experiments.hpp"
#include "cmag/io.hpp"
#include "cmag/walsh.hpp"
#include "support.hpp"

using namespace cmag;
using Catch::Approx;
using Eigen::VectorXd;

namespace {

bool same_record(const TrialRecord& a, const TrialRecord& b) {
  return a.seed == b.seed && a.m == b.m && a.msqe == b.msqe && a.success == b.success &&
         a.iterations == b.iterations && a.converged == b.converged && a.l1_value == b.l1_value &&
         a.recovery_error == b.recovery_error && a.failure == b.failure;
}

std::vector<ControlSequence> walsh_sequences(const std::vector<std::size_t>& rows, int N, double T) {
  std::vector<ControlSequence> out;
  for (std::size_t k : rows) out.push_back(walsh_control_sequence(k, N, T));
  return out;
}

// Wilson score interval, z = 1.96
std::pair<double, double> wilson(int k, int n) {
  const double z = 1.96, p = static_cast<double>(k) / n, d = 1 + z * z / n;
  const double c = (p + z * z / (2 * n)) / d;
  const double h = z * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / d;
  return {c - h, c + h};
}

}  // namespace

TEST_CASE("msqe") {
  VectorXd a = VectorXd::LinSpaced(64, -1.0, 1.0);
  CHECK(msqe(a, a, 1e-3) == 0.0);
  CHECK(msqe(a, a.array() + 1.0, 1e-3) == Approx(1e-3).epsilon(1e-14));
  CHECK_THROWS_AS(msqe(a, VectorXd::Zero(63), 1e-3), Error);
  CHECK_THROWS_AS(msqe(VectorXd{}, VectorXd{}, 1e-3), Error);

  std::mt19937_64 eng(17);
  std::normal_distribution<double> g;
  for (int r = 0; r < 50; ++r) {
    VectorXd x(1024), y(1024);
    for (int i = 0; i < 1024; ++i) {
      x(i) = g(eng);
      y(i) = g(eng);
    }
    // two passes: differences, then a compensated sum
    std::vector<long double> d(1024);
    for (int i = 0; i < 1024; ++i) d[i] = static_cast<long double>(x(i)) - y(i);
    long double s = 0, c = 0;
    for (auto v : d) {
      const long double t = s + (v * v - c);
      c = (t - s) - (v * v - c);
      s = t;
    }
    const double oracle = static_cast<double>(s * 1e-3L / 1024);
    REQUIRE(msqe(x, y, 1e-3) == Approx(oracle).epsilon(1e-13));
  }
}

TEST_CASE("scenario names round trip") {
  for (auto s : {Scenario::walsh_spike, Scenario::random_multitone, Scenario::random_spike, Scenario::quadrature_gap,
                 Scenario::noisy})
    CHECK(scenario_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scenario_from_string("walsh"), Error);
}

TEST_CASE("default configurations") {
  const auto w = default_config(Scenario::walsh_spike);
  CHECK(w.N == 10);
  CHECK(w.T == 1e-3);
  CHECK(w.trials == 200);
  CHECK(w.msqe_threshold == 1e-9);
  REQUIRE(w.m_values.size() == 11);
  CHECK(w.m_values.front() == 200);
  CHECK(w.m_values.back() == 300);
  const auto r = default_config(Scenario::random_multitone);
  CHECK(r.msqe_threshold == 0.005);
  CHECK(r.m_values.front() == 250);
  CHECK(r.m_values.back() == 350);
  for (auto s : {Scenario::walsh_spike, Scenario::random_multitone, Scenario::random_spike, Scenario::quadrature_gap,
                 Scenario::noisy})
    CHECK_NOTHROW(validate(default_config(s)));
}

TEST_CASE("validate rejects bad configurations") {
  auto is_config = Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::configuration; });
  auto base = default_config(Scenario::walsh_spike);
  auto c = base;
  c.m_values = {1025};
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.m_values = {};
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.m_values = {0};
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.trials = 0;
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.msqe_threshold = 0.0;
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.noise_sigma = -1.0;
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.N = 14;
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  c = base;
  c.fixed_reciprocals = {3, 0};
  CHECK_THROWS_MATCHES(validate(c), Error, is_config);
  CHECK_THROWS_MATCHES(run_sweep(c), Error, is_config);
  CHECK_THROWS_AS(noisy_run(default_config(Scenario::noisy), -0.1), Error);
}

TEST_CASE("trial seeds are distinct across scenario, m and trial") {
  std::set<std::uint64_t> seen;
  for (auto s : {Scenario::walsh_spike, Scenario::random_multitone, Scenario::random_spike}) {
    auto cfg = default_config(s);
    for (std::size_t m : {100u, 200u, 250u})
      for (int t = 0; t < 100; ++t) seen.insert(trial_seed(cfg, m, t));
  }
  CHECK(seen.size() == 900);
  auto cfg = default_config(Scenario::walsh_spike);
  const auto a = trial_seed(cfg, 200, 3);
  cfg.master_seed = 2;
  CHECK(trial_seed(cfg, 200, 3) != a);
}

TEST_CASE("trials reject the wrong scenario") {
  const auto cfg = default_config(Scenario::random_multitone);
  CHECK_THROWS_AS(run_walsh_spike_trial(1, 100, cfg), Error);
}

TEST_CASE("full measurement sets recover exactly") {
  auto w = default_config(Scenario::walsh_spike);
  for (int t = 0; t < 5; ++t) {
    const auto r = run_trial(trial_seed(w, 1024, t), 1024, w);
    INFO("walsh msqe " << r.msqe);
    CHECK(r.success);
    // (nT)^2 ms, i.e. below 1e-18 (nT)^2 s
    CHECK(r.msqe < 1e-15);
  }
  auto s = default_config(Scenario::random_spike);
  for (int t = 0; t < 2; ++t) {
    const auto r = run_trial(trial_seed(s, 1024, t), 1024, s);
    INFO("random spike msqe " << r.msqe);
    CHECK(r.success);
    CHECK(r.recovery_error < 1e-8);
  }
}

TEST_CASE("success flag is the threshold test") {
  auto cfg = default_config(Scenario::walsh_spike);
  cfg.m_values = {180, 240};
  cfg.trials = 20;
  const auto res = run_sweep(cfg);
  REQUIRE(res.records.size() == 40);
  for (const auto& r : res.records) REQUIRE(r.success == (r.converged && r.msqe < cfg.msqe_threshold));
  for (const auto& p : res.points) {
    CHECK(p.p_suc >= 0.0);
    CHECK(p.p_suc <= 1.0);
    CHECK(p.p_suc == Approx(double(p.successes) / p.trials));
  }
}

TEST_CASE("a single-trial sweep echoes the trial") {
  for (auto s : {Scenario::walsh_spike, Scenario::random_multitone, Scenario::random_spike, Scenario::noisy}) {
    auto cfg = default_config(s);
    cfg.m_values = {cfg.m_values.front()};
    cfg.trials = 1;
    const auto res = run_sweep(cfg);
    REQUIRE(res.records.size() == 1);
    const auto direct = run_trial(trial_seed(cfg, cfg.m_values[0], 0), cfg.m_values[0], cfg);
    CHECK(same_record(res.records[0], direct));
    CHECK(res.points[0].successes == int(direct.success));
  }
}

TEST_CASE("sweeps are byte-identical across runs and thread counts") {
  for (auto s : {Scenario::walsh_spike, Scenario::random_multitone, Scenario::noisy, Scenario::quadrature_gap}) {
    auto cfg = default_config(s);
    cfg.m_values = {cfg.m_values.front(), cfg.m_values.back()};
    cfg.trials = 6;
    cfg.threads = 1;
    const auto a = sweep_to_json(run_sweep(cfg));
    const auto b = sweep_to_json(run_sweep(cfg));
    cfg.threads = 3;
    const auto c = sweep_to_json(run_sweep(cfg));
    CHECK(a == b);
    CHECK(a == c);
  }
}

TEST_CASE("walsh spike errors are bimodal", "[slow]") {
  auto cfg = default_config(Scenario::walsh_spike);
  cfg.m_values = {200};
  cfg.trials = 500;
  const auto res = run_sweep(cfg);
  int dead = 0, low = 0;
  for (const auto& r : res.records) {
    dead += r.msqe >= 1e-9 && r.msqe <= 1e-4;
    low += r.msqe < 1e-9;
  }
  INFO("successes " << low << ", dead band " << dead);
  CHECK(dead == 0);
  // both modes are populated at this m
  CHECK(low > 0);
  CHECK(low < 500);
}

TEST_CASE("success rate is nondecreasing in m within binomial slack") {
  auto cfg = default_config(Scenario::walsh_spike);
  cfg.m_values = {180, 220, 260, 300};
  cfg.trials = 60;
  const auto res = run_sweep(cfg);
  for (std::size_t i = 1; i < res.points.size(); ++i) {
    const auto lo = wilson(res.points[i].successes, res.points[i].trials);
    const auto hi = wilson(res.points[i - 1].successes, res.points[i - 1].trials);
    INFO("m " << res.points[i].m << " p " << res.points[i].p_suc << " previous " << res.points[i - 1].p_suc);
    CHECK(lo.second >= hi.first);
  }
  CHECK(res.points.back().p_suc > res.points.front().p_suc);
}

TEST_CASE("quadrature gap of a constant field is zero") {
  MultiToneField c{1e-3, {{0.7, 0.0, 0.0}}};
  const auto seqs = random_control_sequences(3, 40, 256, 1e-3);
  const auto r = quadrature_gap(c, seqs, 8, Pipeline::random);
  CHECK(r.gap < 1e-13);
  CHECK(r.bound == 0.0);
  CHECK(r.within_bound);
  const auto w = quadrature_gap(c, walsh_sequences({0, 1, 5, 200}, 8, 1e-3), 8, Pipeline::walsh);
  CHECK(w.gap < 1e-13);
  CHECK(w.within_bound);
}

TEST_CASE("quadrature gap of the fixture stays below both bounds") {
  const auto f = test::fixture_field();
  const auto rows = sample_measurement_indices(11, 250, 1024);
  const auto w = quadrature_gap(f, walsh_sequences(rows, 10, f.T), 10, Pipeline::walsh);
  INFO("walsh gap " << w.gap << " bound " << w.bound);
  CHECK(w.gap > 0.0);
  CHECK(w.gap <= w.bound);
  const auto r = quadrature_gap(f, random_control_sequences(12, 250, 1024, f.T), 10, Pipeline::random);
  INFO("random gap " << r.gap << " bound " << r.bound);
  CHECK(r.gap > 0.0);
  CHECK(r.gap <= r.bound);
  CHECK_NOTHROW(quadrature_gap_check(f, random_control_sequences(12, 250, 1024, f.T), 10, Pipeline::random));
}

TEST_CASE("quadrature report singles out the worst entry") {
  const auto f = test::fixture_field(6);
  const auto seqs = random_control_sequences(5, 30, 256, f.T);
  const auto r = quadrature_gap(f, seqs, 8, Pipeline::random);
  REQUIRE(r.worst_sequence < 30);
  CHECK(r.worst_entry_gap <= r.gap);
  CHECK(r.worst_entry_gap * std::sqrt(30.0) >= r.gap);
  const auto one = quadrature_gap(f, {seqs[r.worst_sequence]}, 8, Pipeline::random);
  // single-row scale is n / T against n / (T sqrt(30))
  CHECK(one.gap == Approx(r.worst_entry_gap * std::sqrt(30.0)).epsilon(1e-12));
  CHECK_THROWS_AS(quadrature_gap(f, {}, 8, Pipeline::random), Error);
  CHECK_THROWS_AS(quadrature_gap(f, seqs, 9, Pipeline::random), Error);
}

TEST_CASE("doubling n shrinks the walsh bound by 2^(3/2)") {
  const auto f = test::fixture_field();
  const auto rows = sample_measurement_indices(21, 250, 1024);
  const auto a = quadrature_gap(f, walsh_sequences(rows, 10, f.T), 10, Pipeline::walsh);
  const auto b = quadrature_gap(f, walsh_sequences(rows, 11, f.T), 11, Pipeline::walsh);
  CHECK(a.bound / b.bound == Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
  INFO("gaps " << a.gap << " -> " << b.gap);
  CHECK(b.gap < a.gap);
  CHECK(b.gap <= b.bound);
}

TEST_CASE("noiseless noisy-scenario trials are exact") {
  auto cfg = default_config(Scenario::noisy);
  cfg.m_values = {128};
  cfg.trials = 10;
  const auto zero = noisy_run(cfg, 0.0);
  for (const auto& r : zero.records) {
    CHECK(r.epsilon == 0.0);
    CHECK(r.recovery_error < 1e-8);
  }
  auto plain = cfg;
  plain.noise_sigma = 0.0;
  CHECK(sweep_to_json(zero) == sweep_to_json(run_sweep(plain)));
}

TEST_CASE("noisy reconstruction error grows with sigma") {
  auto cfg = default_config(Scenario::noisy);
  cfg.trials = 40;
  const auto small = noisy_run(cfg, 0.01);
  const auto large = noisy_run(cfg, 0.1);
  INFO("median errors " << small.points[0].median_recovery_error << " " << large.points[0].median_recovery_error);
  CHECK(large.points[0].median_recovery_error > small.points[0].median_recovery_error);
  for (const auto& r : small.records) CHECK(r.residual_norm <= r.epsilon * (1 + 1e-6));
}

TEST_CASE("trial dumps carry the time grid and both fields") {
  auto cfg = default_config(Scenario::walsh_spike);
  TrialDump d;
  const auto r = run_trial(trial_seed(cfg, 300, 0), 300, cfg, &d);
  REQUIRE(d.t.size() == 1024);
  REQUIRE(d.B_sim.size() == 1024);
  REQUIRE(d.B_rec.size() == 1024);
  CHECK(d.t.front() == Approx(1e-3 / 2048));
  VectorXd a = Eigen::Map<VectorXd>(d.B_sim.data(), 1024), b = Eigen::Map<VectorXd>(d.B_rec.data(), 1024);
  CHECK(msqe(a, b, 1.0) == Approx(r.msqe).epsilon(1e-12));
}
