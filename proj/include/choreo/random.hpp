#pragma once

/// \file random.hpp
/// Seeded loop generators. Everything here is deterministic in the seed.

#include <cmath>
#include <cstdint>
#include <random>

#include "choreo/loop.hpp"

namespace choreo {

using Rng = std::mt19937_64;

/// Planar circle radius*exp(J m t) in coordinates (0, 1); m may be negative.
inline FourierLoop circle_loop(int dim, int cutoff, double radius, int winding) {
  const int k = std::abs(winding);
  if (k < 1 || k > cutoff) throw Error("circle_loop: |winding| must lie in [1, cutoff]");
  FourierLoop x(dim, cutoff);
  x.cos(k, 0) = radius;
  x.sin(k, 1) = winding > 0 ? radius : -radius;
  return x;
}

/// Uniform noise in [-amplitude, amplitude] on every non-mean coefficient, damped like 1/k.
inline FourierLoop random_loop(int dim, int cutoff, Rng& rng, double amplitude = 1.0, bool with_mean = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FourierLoop x(dim, cutoff);
  if (with_mean)
    for (int i = 0; i < dim; ++i) x.mean(i) = amplitude * u(rng);
  for (int k = 1; k <= cutoff; ++k) {
    for (int i = 0; i < dim; ++i) {
      x.cos(k, i) = amplitude * u(rng) / k;
      x.sin(k, i) = amplitude * u(rng) / k;
    }
  }
  return x;
}

inline void add_noise(FourierLoop& x, Rng& rng, double amplitude) {
  if (amplitude <= 0.0) return;
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (int k = 1; k <= x.cutoff(); ++k) {
    for (int i = 0; i < x.dim(); ++i) {
      x.cos(k, i) += u(rng);
      x.sin(k, i) += u(rng);
    }
  }
}

}  // namespace choreo
