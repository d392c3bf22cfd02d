// SPDX-License-Identifier: Apache-2.0

#include "cmag/signal_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cmag/error.hpp"
#include "cmag/random.hpp"

namespace cmag {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Overlap length of [a, b) and [c, d).
double overlap(double a, double b, double c, double d) { return std::max(0.0, std::min(b, d) - std::max(a, c)); }

}  // namespace

double duration(const FieldModel& field) {
  return std::visit([](const auto& f) { return f.T; }, field);
}

void validate(const FieldModel& field) {
  const double T = duration(field);
  require(std::isfinite(T) && T > 0.0, ErrorCode::configuration, "field duration T must be positive and finite");
  std::visit(overloaded{
                 [T](const SpikeTrainField& f) {
                   std::vector<SpikeEvent> ev = f.events;
                   std::sort(ev.begin(), ev.end(),
                             [](const SpikeEvent& a, const SpikeEvent& b) { return a.t_start < b.t_start; });
                   // grid-snapped events that touch can overlap by a rounding error
                   const double slack = 1e-12 * T;
                   double prev_end = 0.0;
                   for (const auto& e : ev) {
                     require(std::isfinite(e.t_start) && std::isfinite(e.amplitude) && std::isfinite(e.half_width),
                             ErrorCode::configuration, "spike event has non-finite parameters");
                     require(e.half_width > 0.0, ErrorCode::configuration, "spike half-width must be positive");
                     require(e.t_start >= prev_end - slack, ErrorCode::configuration, "spike events overlap or start before 0");
                     prev_end = e.t_start + 2.0 * e.half_width;
                     require(prev_end <= T + slack, ErrorCode::configuration, "spike event extends past T");
                   }
                 },
                 [](const MultiToneField& f) {
                   for (const auto& tone : f.tones) {
                     require(std::isfinite(tone.amplitude) && std::isfinite(tone.frequency) &&
                                 std::isfinite(tone.phase),
                             ErrorCode::configuration, "tone has non-finite parameters");
                   }
                 },
             },
             field);
}

SpikeTrainField sample_spike_train(std::uint64_t seed, double T, int n_events, double half_width, double amplitude,
                                   int grid_order) {
  require(T > 0.0 && half_width > 0.0, ErrorCode::configuration, "spike train needs T > 0 and half-width > 0");
  require(n_events >= 0, ErrorCode::configuration, "negative event count");
  require(grid_order >= 0 && grid_order <= 30, ErrorCode::configuration, "grid order out of range");
  require(static_cast<double>(n_events) * 2.0 * half_width < T, ErrorCode::configuration,
          "infeasible packing: n_events * 2 * half_width >= T");
  const std::size_t n = std::size_t{1} << grid_order;
  const double cell = T / static_cast<double>(n);
  require(cell < half_width, ErrorCode::configuration,
          "grid too coarse: 2^-N T must be smaller than the half-width");

  const auto width_cells = static_cast<std::size_t>(std::llround(half_width / cell));
  const std::size_t event_cells = 2 * width_cells;
  require(static_cast<std::size_t>(n_events) * event_cells <= n, ErrorCode::configuration,
          "infeasible packing on the grid");

  auto eng = make_engine(seed);
  std::vector<std::size_t> starts;
  starts.reserve(static_cast<std::size_t>(n_events));
  const std::size_t max_start = n - event_cells;
  constexpr int kMaxAttempts = 100000;
  for (int e = 0; e < n_events; ++e) {
    int attempts = 0;
    for (;;) {
      require(++attempts <= kMaxAttempts, ErrorCode::configuration,
              "could not place disjoint spike events (packing too dense)");
      const std::size_t c = uniform_int(eng, 0, max_start);
      const bool clash = std::any_of(starts.begin(), starts.end(), [&](std::size_t s) {
        return c < s + event_cells && s < c + event_cells;
      });
      if (!clash) {
        starts.push_back(c);
        break;
      }
    }
  }
  std::sort(starts.begin(), starts.end());

  SpikeTrainField out;
  out.T = T;
  for (std::size_t c : starts) {
    out.events.push_back({static_cast<double>(c) * cell, amplitude, static_cast<double>(width_cells) * cell});
  }
  return out;
}

MultiToneField multitone_with_reciprocals(std::uint64_t seed, const std::vector<int>& k, std::size_t n, double T) {
  require(T > 0.0, ErrorCode::configuration, "T must be positive");
  auto eng = make_engine(seed);
  MultiToneField out;
  out.T = T;
  const double cutoff = static_cast<double>(n) / T;
  for (int kj : k) {
    require(kj >= 1, ErrorCode::configuration, "reciprocal index must be >= 1");
    Tone tone;
    tone.frequency = cutoff / static_cast<double>(kj);
    tone.phase = kTwoPi * uniform01(eng);
    tone.amplitude = uniform01(eng);
    out.tones.push_back(tone);
  }
  return out;
}

MultiToneField sample_multitone(std::uint64_t seed, int S, std::size_t n, double T) {
  require(S >= 1, ErrorCode::configuration, "multitone needs S >= 1");
  require(n >= 1 && (n & (n - 1)) == 0, ErrorCode::configuration, "grid size must be a power of 2");
  require(static_cast<std::size_t>(S) <= n, ErrorCode::configuration, "more tones than available frequencies");
  auto eng = make_engine(seed);
  std::vector<int> k;
  while (k.size() < static_cast<std::size_t>(S)) {
    const int c = static_cast<int>(uniform_int(eng, 1, n));
    if (std::find(k.begin(), k.end(), c) == k.end()) k.push_back(c);
  }
  return multitone_with_reciprocals(splitmix64(seed ^ 0x5bd1e995ULL), k, n, T);
}

double evaluate(const FieldModel& field, double t) {
  const double T = duration(field);
  require(t >= 0.0 && t < T, ErrorCode::domain, "evaluation time outside [0, T)");
  return std::visit(overloaded{
                        [t](const SpikeTrainField& f) {
                          for (const auto& e : f.events) {
                            if (t < e.t_start) continue;
                            if (t < e.t_start + e.half_width) return e.amplitude;
                            if (t < e.t_start + 2.0 * e.half_width) return -e.amplitude;
                          }
                          return 0.0;
                        },
                        [t](const MultiToneField& f) {
                          double b = 0.0;
                          for (const auto& tone : f.tones) {
                            b += tone.amplitude * std::cos(kTwoPi * tone.frequency * t + tone.phase);
                          }
                          return b;
                        },
                    },
                    field);
}

DiscretizedField discretize(const FieldModel& field, int N) {
  require(N >= 0 && N <= 30, ErrorCode::domain, "discretization order out of range");
  DiscretizedField d;
  d.N = N;
  d.T = duration(field);
  const std::size_t n = std::size_t{1} << N;
  d.B.resize(n);
  d.s.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    d.s[j] = cell_midpoint(j, n, d.T);
    d.B[j] = evaluate(field, d.s[j]);
  }
  return d;
}

double second_derivative_bound(const FieldModel& field) {
  const auto* mt = std::get_if<MultiToneField>(&field);
  require(mt != nullptr, ErrorCode::unsupported,
          "second-derivative bound is only defined for smooth multitone fields");
  double bound = 0.0;
  for (const auto& tone : mt->tones) {
    const double w = kTwoPi * tone.frequency;
    bound += std::abs(tone.amplitude) * w * w;
  }
  return bound;
}

std::vector<double> exact_cell_integrals(const FieldModel& field, std::size_t n) {
  require(n >= 1, ErrorCode::domain, "need at least one cell");
  const double T = duration(field);
  const double h = T / static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  std::visit(overloaded{
                 [&](const SpikeTrainField& f) {
                   for (const auto& e : f.events) {
                     const double a = e.t_start, mid = e.t_start + e.half_width, b = e.t_start + 2.0 * e.half_width;
                     const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(a / h)));
                     const auto last = std::min(n - 1, static_cast<std::size_t>(std::floor(b / h)));
                     for (std::size_t j = first; j <= last; ++j) {
                       const double lo = static_cast<double>(j) * h, hi = static_cast<double>(j + 1) * h;
                       out[j] += e.amplitude * (overlap(lo, hi, a, mid) - overlap(lo, hi, mid, b));
                     }
                   }
                 },
                 [&](const MultiToneField& f) {
                   // integral of cos over a cell = h * cos(midpoint phase) * sinc(pi f h)
                   for (const auto& tone : f.tones) {
                     const double damp = tone.amplitude * h * sinc(std::numbers::pi * tone.frequency * h);
                     for (std::size_t j = 0; j < n; ++j) {
                       out[j] += damp * std::cos(kTwoPi * tone.frequency * cell_midpoint(j, n, T) + tone.phase);
                     }
                   }
                 },
             },
             field);
  return out;
}

}  // namespace cmag
