// SPDX-License-Identifier: Apache-2.0
//
// Parametric field models b(t) on [0, T). Units are nanotesla and seconds;
// the gyromagnetic ratio is absorbed (gamma = 1), so phases are nT*s.

#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

namespace cmag {

struct SpikeEvent {
  double t_start = 0.0;     // s
  double amplitude = 0.0;   // nT; +amplitude on the first half, -amplitude on the second
  double half_width = 0.0;  // s
};

/// Train of rectangular biphasic events. Each event occupies
/// [t_start, t_start + 2*half_width) inside [0, T); events are disjoint.
struct SpikeTrainField {
  double T = 0.0;
  std::vector<SpikeEvent> events;

  std::size_t n_events() const { return events.size(); }
};

struct Tone {
  double amplitude = 0.0;  // nT
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};

/// b(t) = sum_j A_j cos(2 pi f_j t + phi_j).
struct MultiToneField {
  double T = 0.0;
  std::vector<Tone> tones;
};

using FieldModel = std::variant<SpikeTrainField, MultiToneField>;

/// Samples of a field at the n = 2^N cell midpoints s_j = (2j+1)T/(2n).
struct DiscretizedField {
  int N = 0;
  double T = 0.0;
  std::vector<double> B;
  std::vector<double> s;

  std::size_t n() const { return B.size(); }
};

double duration(const FieldModel& field);

/// Throws configuration error if the model violates its invariants
/// (events overlapping or leaving [0, T), non-finite parameters, T <= 0).
void validate(const FieldModel& field);

/// Midpoint of cell j on an n-cell grid over [0, T).
inline double cell_midpoint(std::size_t j, std::size_t n, double T) {
  return static_cast<double>(2 * j + 1) * T / (2.0 * static_cast<double>(n));
}

/// Draws event starts uniformly on the 2^N grid, redrawing each event until
/// it is disjoint from those already placed. The half-width is snapped to a
/// whole number of grid cells so the field is constant on every cell.
SpikeTrainField sample_spike_train(std::uint64_t seed, double T, int n_events, double half_width,
                                   double amplitude, int grid_order);

/// S tones with f_j = (n/T)/k_j, k_j drawn uniformly without replacement from
/// {1..n}; amplitudes uniform in [0,1), phases uniform in [0, 2 pi).
MultiToneField sample_multitone(std::uint64_t seed, int S, std::size_t n, double T);

/// Same as sample_multitone but with a fixed set of reciprocal indices k_j
/// (f_j = (n/T)/k_j); only amplitudes and phases are random.
MultiToneField multitone_with_reciprocals(std::uint64_t seed, const std::vector<int>& k, std::size_t n,
                                          double T);

/// Analytic evaluation; throws domain error for t outside [0, T).
double evaluate(const FieldModel& field, double t);

DiscretizedField discretize(const FieldModel& field, int N);

/// Sum_j A_j (2 pi f_j)^2, an upper bound on max |b''(t)|. Unsupported for
/// spike trains, whose rectangular edges have no bounded second derivative.
double second_derivative_bound(const FieldModel& field);

/// Exact integrals of b over each of the n cells [jT/n, (j+1)T/n).
std::vector<double> exact_cell_integrals(const FieldModel& field, std::size_t n);

}  // namespace cmag
