// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "aclab/field.hpp"

namespace aclab {

/// Deterministic pseudo-random source: mt19937_64 with explicit seeding and a
/// fixed bits-to-double mapping, so streams are reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  int index(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  /// Random band-limited field with Gaussian spectral decay: every half-lattice
  /// mode gets independent cos/sin weights in [-1,1] scaled by
  /// amplitude * exp(-|k|^2 / (2 decay^2)). Mean (zero mode) is `mean`.
  Field smooth_field(const TorusGrid& grid, double amplitude, double decay, double mean = 0.0) {
    std::vector<cplx> coef(grid.points(), cplx(0.0, 0.0));
    coef[0] = cplx(mean, 0.0);
    detail::for_each_band_mode(grid, [&](const std::array<int, 3>& k) {
      const bool positive =
          k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)));
      if (!positive) return;
      double k2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) k2 += static_cast<double>(k[a]) * k[a];
      const double w = amplitude * std::exp(-k2 / (2.0 * decay * decay));
      const cplx v(w * uniform(-1.0, 1.0), w * uniform(-1.0, 1.0));
      coef[grid.flat_index(k, grid.n)] = v;
      coef[grid.flat_index({-k[0], -k[1], -k[2]}, grid.n)] = std::conj(v);
    });
    return Field::from_coefficients(grid, std::move(coef));
  }

 private:
  std::mt19937_64 gen_;
};

/// FNV-1a hash, used to fingerprint run inputs.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace aclab
