// SPDX-License-Identifier: Apache-2.0

#include "cmag/sensor_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <random>

#include "cmag/error.hpp"
#include "cmag/random.hpp"
#include "cmag/walsh.hpp"

namespace cmag {

ModulationVector modulation_from_bits(const ControlSequence& seq) {
  ModulationVector mod;
  mod.kappa.resize(seq.n());
  int sign = 1;  // kappa = +1 before the first pulse
  for (std::size_t j = 0; j < seq.n(); ++j) {
    require(seq.u[j] <= 1, ErrorCode::domain, "control bits must be 0 or 1");
    if (seq.u[j]) sign = -sign;
    mod.kappa[j] = sign;
  }
  return mod;
}

ControlSequence walsh_control_sequence(std::uint64_t j, int N, double T) {
  require(N >= 0 && N <= 30, ErrorCode::domain, "Walsh order out of range");
  const std::size_t n = std::size_t{1} << N;
  require(j < n, ErrorCode::domain, "Walsh index must be < 2^N");
  const std::uint64_t h = hadamard_row({WalshOrdering::sequency, j}, N);
  ControlSequence seq;
  seq.T = T;
  seq.u.resize(n);
  int prev = 1;
  for (std::size_t c = 0; c < n; ++c) {
    const int w = (std::popcount(h & c) & 1) ? -1 : 1;
    seq.u[c] = (w != prev) ? 1 : 0;
    prev = w;
  }
  return seq;
}

ControlSequence random_control_sequence(std::uint64_t seed, std::size_t n, double T) {
  require(n >= 1, ErrorCode::domain, "control sequence needs n >= 1");
  auto eng = make_engine(seed);
  ControlSequence seq;
  seq.T = T;
  seq.u.resize(n);
  std::uint64_t bits = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j % 64 == 0) bits = eng();
    seq.u[j] = static_cast<std::uint8_t>(bits & 1U);
    bits >>= 1;
  }
  return seq;
}

double accumulated_phase(const FieldModel& field, const ControlSequence& seq, std::size_t quadrature_points) {
  const std::size_t n = seq.n();
  require(n >= 1 && quadrature_points >= n && quadrature_points % n == 0, ErrorCode::domain,
          "quadrature_points must be a multiple of the sequence length");
  const std::size_t per_cell = quadrature_points / n;
  require((per_cell & (per_cell - 1)) == 0, ErrorCode::domain, "quadrature_points / n must be a power of two");
  const auto mod = modulation_from_bits(seq);
  const double T = duration(field);
  double acc = 0.0;
  for (std::size_t i = 0; i < quadrature_points; ++i) {
    acc += mod.kappa[i / per_cell] * evaluate(field, cell_midpoint(i, quadrature_points, T));
  }
  return acc * T / static_cast<double>(quadrature_points);
}

double accumulated_phase(std::span<const double> cell_integrals, const ModulationVector& mod) {
  require(cell_integrals.size() == mod.n(), ErrorCode::domain, "cell integral count must equal sequence length");
  double acc = 0.0;
  for (std::size_t j = 0; j < mod.n(); ++j) acc += mod.kappa[j] * cell_integrals[j];
  return acc;
}

double outcome_probability(double phase, double v) {
  require(v > 0.0 && v <= 1.0, ErrorCode::domain, "decoherence factor must lie in (0, 1]");
  return 0.5 * (1.0 + v * std::sin(phase));
}

double simulate_measurements(std::uint64_t seed, double p0, std::uint64_t n_reps) {
  require(n_reps >= 1, ErrorCode::domain, "need at least one repetition");
  require(p0 >= 0.0 && p0 <= 1.0, ErrorCode::domain, "probability outside [0, 1]");
  auto eng = make_engine(seed);
  std::binomial_distribution<std::uint64_t> dist(n_reps, p0);
  return static_cast<double>(dist(eng)) / static_cast<double>(n_reps);
}

double invert_phase(double p0_hat, double v, double T) {
  require(v > 0.0 && v <= 1.0, ErrorCode::domain, "decoherence factor must lie in (0, 1]");
  require(T > 0.0, ErrorCode::domain, "T must be positive");
  const double arg = (2.0 * p0_hat - 1.0) / v;
  require(std::abs(2.0 * p0_hat - 1.0) <= v, ErrorCode::domain,
          "|2 p0_hat - 1| exceeds the decoherence factor; phase cannot be inverted");
  return std::asin(arg) / T;
}

bool phase_near_branch_edge(double p0_hat, double v) {
  return std::abs((2.0 * p0_hat - 1.0) / v) > std::sin(1.5);
}

double filter_function(const ControlSequence& seq, double omega) {
  require(omega >= 0.0, ErrorCode::domain, "frequency must be non-negative");
  const std::size_t n = seq.n();
  if (n == 0 || omega == 0.0) return 0.0;
  const auto mod = modulation_from_bits(seq);
  const double h = seq.T / static_cast<double>(n);
  // w * int kappa e^{iwt} dt = -i * sum_segments kappa (e^{iwb} - e^{iwa})
  std::complex<double> acc{0.0, 0.0};
  std::size_t start = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    if (j == n || mod.kappa[j] != mod.kappa[start]) {
      const double a = static_cast<double>(start) * h, b = static_cast<double>(j) * h;
      acc += static_cast<double>(mod.kappa[start]) *
             (std::polar(1.0, omega * b) - std::polar(1.0, omega * a));
      start = j;
    }
  }
  return 0.5 * std::norm(acc);
}

double SpectrumTerm::value(double omega) const {
  switch (kind) {
    case SpectrumKind::none:
      return 0.0;
    case SpectrumKind::white:
      return level;
    case SpectrumKind::one_over_f:
      return omega < cutoff || omega <= 0.0 ? 0.0 : level / omega;
    case SpectrumKind::custom: {
      if (table_omega.empty() || omega < table_omega.front() || omega > table_omega.back()) return 0.0;
      auto it = std::upper_bound(table_omega.begin(), table_omega.end(), omega);
      if (it == table_omega.end()) return table_S.back();
      const auto i = static_cast<std::size_t>(it - table_omega.begin());
      const double w0 = table_omega[i - 1], w1 = table_omega[i];
      const double f = (omega - w0) / (w1 - w0);
      return table_S[i - 1] + f * (table_S[i] - table_S[i - 1]);
    }
  }
  return 0.0;
}

NoiseModel NoiseModel::white(double S0) {
  NoiseModel m;
  m.terms.push_back({SpectrumKind::white, S0, 0.0, {}, {}});
  return m;
}

NoiseModel NoiseModel::one_over_f(double A, double cutoff) {
  NoiseModel m;
  m.terms.push_back({SpectrumKind::one_over_f, A, cutoff, {}, {}});
  return m;
}

NoiseModel NoiseModel::custom(std::vector<double> omega, std::vector<double> S) {
  NoiseModel m;
  m.terms.push_back({SpectrumKind::custom, 0.0, 0.0, std::move(omega), std::move(S)});
  return m;
}

SpectrumKind NoiseModel::kind() const {
  if (terms.empty()) return SpectrumKind::none;
  if (terms.size() == 1) return terms.front().kind;
  return SpectrumKind::custom;
}

double NoiseModel::spectrum(double omega) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.value(omega);
  return s;
}

void NoiseModel::validate() const {
  require(omega_min > 0.0 && omega_max > omega_min && grid_points >= 2, ErrorCode::configuration,
          "noise integration grid must satisfy 0 < omega_min < omega_max with >= 2 points");
  for (const auto& t : terms) {
    switch (t.kind) {
      case SpectrumKind::white:
      case SpectrumKind::one_over_f:
        require(t.level >= 0.0 && std::isfinite(t.level), ErrorCode::configuration, "spectrum level must be >= 0");
        break;
      case SpectrumKind::custom:
        require(t.table_omega.size() == t.table_S.size() && t.table_omega.size() >= 2, ErrorCode::configuration,
                "custom spectrum needs matching tables with >= 2 points");
        for (std::size_t i = 0; i < t.table_omega.size(); ++i) {
          require(t.table_S[i] >= 0.0 && std::isfinite(t.table_S[i]), ErrorCode::configuration,
                  "custom spectrum values must be >= 0");
          if (i > 0) {
            require(t.table_omega[i] > t.table_omega[i - 1], ErrorCode::configuration,
                    "custom spectrum grid must be strictly increasing");
          }
        }
        break;
      case SpectrumKind::none:
        break;
    }
  }
}

NoiseModel operator+(const NoiseModel& a, const NoiseModel& b) {
  NoiseModel out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

Decoherence chi(const NoiseModel& noise, const ControlSequence& seq) {
  noise.validate();
  Decoherence d;
  if (noise.terms.empty()) return d;
  const double log_lo = std::log(noise.omega_min), log_hi = std::log(noise.omega_max);
  const double step = (log_hi - log_lo) / static_cast<double>(noise.grid_points - 1);
  double acc = 0.0;
  double prev = noise.omega_min;
  for (std::size_t k = 1; k < noise.grid_points; ++k) {
    const double next = std::exp(log_lo + step * static_cast<double>(k));
    const double mid = 0.5 * (prev + next);
    const double integrand = noise.spectrum(mid) / (mid * mid) * filter_function(seq, mid);
    require(std::isfinite(integrand), ErrorCode::numeric, "non-finite decoherence integrand");
    acc += integrand * (next - prev);
    prev = next;
  }
  d.chi = acc;
  d.v = std::exp(-acc);
  return d;
}

double sensitivity(std::uint64_t n_reps, double T, double v) {
  require(n_reps >= 1, ErrorCode::domain, "need at least one repetition");
  require(v > 0.0 && v <= 1.0, ErrorCode::domain, "decoherence factor must lie in (0, 1]");
  return 1.0 / (std::sqrt(static_cast<double>(n_reps)) * T * v);
}

double measurement_noise_norm(std::span<const MeasurementOutcome> outcomes, double T) {
  require(!outcomes.empty(), ErrorCode::domain, "need at least one outcome");
  double acc = 0.0;
  for (const auto& o : outcomes) {
    if (o.n_reps == 0) continue;
    acc += 1.0 / (static_cast<double>(o.n_reps) * T * T * o.v * o.v);
  }
  return std::sqrt(acc);
}

MeasurementOutcome simulate_outcome(double phase, double v, double T, std::uint64_t n_reps, std::uint64_t seed) {
  MeasurementOutcome o;
  o.v = v;
  o.n_reps = n_reps;
  o.p0_true = outcome_probability(phase, v);
  o.p0_hat = n_reps == 0 ? o.p0_true : simulate_measurements(seed, o.p0_true, n_reps);
  o.z_hat = invert_phase(o.p0_hat, v, T);
  return o;
}

}  // namespace cmag
