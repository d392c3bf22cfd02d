// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "cmag/signal_models.hpp"

namespace cmag::test {

inline const std::vector<int> kFixtureReciprocals = {2, 61, 78, 328, 551, 788, 881, 1022};

inline MultiToneField fixture_field(std::uint64_t seed = 7) {
  return multitone_with_reciprocals(seed, kFixtureReciprocals, 1024, 1e-3);
}

inline double sum_tones(const MultiToneField& f, double t) {
  double b = 0.0;
  for (const auto& tone : f.tones) b += tone.amplitude * std::cos(2.0 * M_PI * tone.frequency * t + tone.phase);
  return b;
}

}  // namespace cmag::test
