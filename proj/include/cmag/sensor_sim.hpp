// SPDX-License-Identifier: Apache-2.0
//
// Pi-pulse controlled qubit sensor: control bit strings, the +-1 modulation
// they induce, Ramsey outcome statistics, and dephasing via filter functions.
// Pulses are ideal and instantaneous.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cmag/signal_models.hpp"

namespace cmag {

/// u[j] = 1 means a pi-pulse at t_j = jT/n.
struct ControlSequence {
  double T = 0.0;
  std::vector<std::uint8_t> u;

  std::size_t n() const { return u.size(); }
};

/// kappa[j] = value of the modulation function on (t_j, t_{j+1}).
struct ModulationVector {
  std::vector<int> kappa;

  std::size_t n() const { return kappa.size(); }
};

ModulationVector modulation_from_bits(const ControlSequence& seq);

/// Pulses at the interior grid points where sequency Walsh j switches sign.
ControlSequence walsh_control_sequence(std::uint64_t j, int N, double T);

ControlSequence random_control_sequence(std::uint64_t seed, std::size_t n, double T);

/// phi_u(T) = int_0^T kappa_u(t) b(t) dt with midpoint quadrature on
/// quadrature_points sub-cells; quadrature_points must be a power-of-two
/// multiple of n.
double accumulated_phase(const FieldModel& field, const ControlSequence& seq, std::size_t quadrature_points);

/// Same integral from precomputed per-cell integrals of b.
double accumulated_phase(std::span<const double> cell_integrals, const ModulationVector& mod);

/// p0 = (1 + v sin(phi)) / 2.
double outcome_probability(double phase, double v);

/// Binomial(N_reps, p0) / N_reps.
double simulate_measurements(std::uint64_t seed, double p0, std::uint64_t n_reps);

/// z = asin((2 p0_hat - 1) / v) / T. Throws domain error when
/// |2 p0_hat - 1| > v rather than clamping.
double invert_phase(double p0_hat, double v, double T);

/// True when the inverted phase |zT| is close enough to pi/2 that the sine
/// branch is ambiguous under shot noise.
bool phase_near_branch_edge(double p0_hat, double v);

/// F(wT) = (w^2/2) |int_0^T kappa_u(t) e^{iwt} dt|^2, evaluated in closed
/// form from the switch times.
double filter_function(const ControlSequence& seq, double omega);

enum class SpectrumKind { none, white, one_over_f, custom };

/// One additive term of a dephasing spectrum S_beta(omega), (nT)^2 s.
struct SpectrumTerm {
  SpectrumKind kind = SpectrumKind::none;
  double level = 0.0;   // white: S0; one_over_f: A in S = A / omega
  double cutoff = 0.0;  // one_over_f: S = 0 below this angular frequency
  std::vector<double> table_omega;  // custom: strictly increasing
  std::vector<double> table_S;      // custom: linearly interpolated, 0 outside

  double value(double omega) const;
};

struct NoiseModel {
  std::vector<SpectrumTerm> terms;  // empty = noiseless
  double omega_min = 1e2;           // rad/s
  double omega_max = 1e9;           // rad/s
  std::size_t grid_points = 4096;

  static NoiseModel white(double S0);
  static NoiseModel one_over_f(double A, double cutoff);
  static NoiseModel custom(std::vector<double> omega, std::vector<double> S);

  /// none, the single term's kind, or custom for sums.
  SpectrumKind kind() const;
  double spectrum(double omega) const;
  void validate() const;
};

/// Sum of spectra; integration settings are taken from the left operand.
NoiseModel operator+(const NoiseModel& a, const NoiseModel& b);

struct Decoherence {
  double chi = 0.0;
  double v = 1.0;
};

/// chi = int S(w)/w^2 F(wT) dw, composite midpoint rule on a log-spaced grid.
Decoherence chi(const NoiseModel& noise, const ControlSequence& seq);

/// Delta z = 1 / (sqrt(N) T v).
double sensitivity(std::uint64_t n_reps, double T, double v);

struct MeasurementOutcome {
  double p0_true = 0.5;
  double p0_hat = 0.5;
  std::uint64_t n_reps = 0;  // 0 = analytic probability, no shot noise
  double v = 1.0;
  double z_hat = 0.0;        // rad/s
};

/// sqrt(sum_j 1 / (N_j T^2 v_j^2)). Outcomes with n_reps == 0 contribute 0.
double measurement_noise_norm(std::span<const MeasurementOutcome> outcomes, double T);

/// Full sensor path for one control sequence: phase -> p0 -> shot noise ->
/// inversion. n_reps == 0 skips shot noise.
MeasurementOutcome simulate_outcome(double phase, double v, double T, std::uint64_t n_reps, std::uint64_t seed);

}  // namespace cmag
