// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Spectral grid and field layer: index bookkeeping, transform round trips,
// translation/derivative actions, and exactness of the de-aliased cubic.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "aclab/field.hpp"
#include "aclab/grid.hpp"
#include "aclab/rng.hpp"

using namespace aclab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("grid layout and band membership", "[grid]") {
  TorusGrid g{2, 16};
  CHECK(g.points() == 256u);
  CHECK(g.kmax() == 7);

  // freq_of maps DFT bins to signed frequencies (bin n/2 stays positive and
  // falls outside the band, so Nyquist content is dropped, not mirrored).
  CHECK(TorusGrid::freq_of(0, 16) == 0);
  CHECK(TorusGrid::freq_of(7, 16) == 7);
  CHECK(TorusGrid::freq_of(8, 16) == 8);
  CHECK(TorusGrid::freq_of(9, 16) == -7);
  CHECK(TorusGrid::freq_of(15, 16) == -1);
  CHECK(TorusGrid::index_of(-1, 16) == 15);

  CHECK(g.in_band({7, -7, 0}));
  CHECK_FALSE(g.in_band({8, 0, 0}));
  CHECK_FALSE(g.in_band({0, -8, 0}));

  // flat_index respects negative wrap-around: k and k+n address the same bin.
  CHECK(g.flat_index({-1, 3, 0}, g.n) == g.flat_index({15 - 16, 3, 0}, g.n));
  CHECK(g.flat_index({-1, 0, 0}, g.n) == 15u * 16u + 0u);

  TorusGrid g3{3, 16};
  CHECK(g3.points() == 4096u);
  std::size_t band_count = 0;
  detail::for_each_band_mode(g3, [&](const std::array<int, 3>&) { ++band_count; });
  CHECK(band_count == 15u * 15u * 15u);
}

TEST_CASE("field transform round trip and cosine synthesis", "[grid]") {
  TorusGrid g{2, 16};
  Rng rng(42);
  Field u = rng.smooth_field(g, 0.7, 2.0, 0.3);

  // values -> from_values reproduces the coefficients exactly.
  Field v = Field::from_values(g, u.values());
  CHECK((u - v).coefficient_norm() <= 1e-14 * u.coefficient_norm());

  // cos(2 pi x1) has coefficients 1/2 at (+-1, 0).
  std::vector<cplx> coef(g.points(), cplx(0.0, 0.0));
  coef[g.flat_index({1, 0, 0}, g.n)] = cplx(0.5, 0.0);
  coef[g.flat_index({-1, 0, 0}, g.n)] = cplx(0.5, 0.0);
  Field c = Field::from_coefficients(g, std::move(coef));
  const auto vals = c.values();
  for (int i = 0; i < g.n; ++i) {
    const double x = static_cast<double>(i) / g.n;
    CHECK(vals[static_cast<std::size_t>(i) * 16u].real() == Catch::Approx(std::cos(2.0 * kPi * x)).margin(1e-14));
  }

  // Oversampled evaluation agrees with the analytic function off the native grid.
  const auto over = c.oversampled_values();
  const double x_half = 1.0 / 32.0;
  CHECK(over[32].real() == Catch::Approx(std::cos(2.0 * kPi * x_half)).margin(1e-14));
}

TEST_CASE("translation and derivative act mode-wise", "[grid]") {
  TorusGrid g{2, 16};
  Rng rng(7);
  Field u = rng.smooth_field(g, 1.0, 2.5, -0.2);

  // Translating by a full period is the identity.
  Field t_full = u.translated({1.0, 0.0, 0.0});
  CHECK((u - t_full).coefficient_norm() <= 1e-12 * u.coefficient_norm());

  // u(x - s) evaluated on the grid equals resampling the analytic shift for a
  // pure cosine: cos(2 pi (x - s)).
  Field c(g);
  c.set_coefficient({1, 0, 0}, cplx(0.5, 0.0));
  const double s = 0.3125;  // 5 grid cells, so the shifted values are exact samples
  const auto shifted = c.translated({s, 0.0, 0.0}).values();
  for (int i = 0; i < g.n; ++i) {
    const double x = static_cast<double>(i) / g.n;
    CHECK(shifted[static_cast<std::size_t>(i) * 16u].real() ==
          Catch::Approx(std::cos(2.0 * kPi * (x - s))).margin(1e-14));
  }

  // d/dx1 cos(2 pi x1) = -2 pi sin(2 pi x1): coefficient i*pi at (1,0).
  Field d = c.derivative(0);
  CHECK(d.coefficient({1, 0, 0}).real() == Catch::Approx(0.0).margin(1e-15));
  CHECK(d.coefficient({1, 0, 0}).imag() == Catch::Approx(kPi).epsilon(1e-14));
  CHECK(d.coefficient({0, 1, 0}) == cplx(0.0, 0.0));
}

TEST_CASE("de-aliased cubic equals the exact Galerkin projection", "[grid]") {
  // Oracle: brute-force triple convolution over the (few) nonzero coefficients
  // of u, truncated to the band. The 2x-oversampled pointwise cube must agree
  // to rounding even when u occupies the edge of the band.
  TorusGrid g{2, 16};
  Field u(g);
  u.set_mean(0.2);
  u.set_coefficient({7, 0, 0}, cplx(0.3, 0.1));    // band edge
  u.set_coefficient({2, -3, 0}, cplx(-0.25, 0.4));

  std::map<std::array<int, 3>, cplx> sparse;
  detail::for_each_band_mode(g, [&](const std::array<int, 3>& k) {
    const cplx c = u.coefficient(k);
    if (std::abs(c) > 0.0) sparse[k] = c;
  });
  REQUIRE(sparse.size() == 5u);

  std::map<std::array<int, 3>, cplx> cube;
  for (const auto& [k1, c1] : sparse)
    for (const auto& [k2, c2] : sparse)
      for (const auto& [k3, c3] : sparse) {
        std::array<int, 3> k{k1[0] + k2[0] + k3[0], k1[1] + k2[1] + k3[1], 0};
        cube[k] += c1 * c2 * c3;
      }

  Field u3 = pointwise(u, [](double t) { return t * t * t; });
  detail::for_each_band_mode(g, [&](const std::array<int, 3>& k) {
    const auto it = cube.find(k);
    const cplx expect = it == cube.end() ? cplx(0.0, 0.0) : it->second;
    CHECK(std::abs(u3.coefficient(k) - expect) <= 1e-14);
  });

  // pointwise_product is consistent with pointwise squaring.
  Field sq = pointwise_product(u, u);
  Field sq2 = pointwise(u, [](double t) { return t * t; });
  CHECK((sq - sq2).coefficient_norm() <= 1e-14);
}

TEST_CASE("field invariants: realness, band enforcement, algebra", "[grid]") {
  TorusGrid g{2, 16};
  Field u(g);
  u.set_coefficient({3, 2, 0}, cplx(0.1, -0.2));
  CHECK(u.coefficient({-3, -2, 0}) == std::conj(u.coefficient({3, 2, 0})));
  CHECK_THROWS_AS(u.set_coefficient({8, 0, 0}, cplx(1.0, 0.0)), std::invalid_argument);

  // All point values of a real field are real after synthesis.
  for (const auto& v : u.values()) CHECK(std::abs(v.imag()) <= 1e-15);

  Field a = Field::constant(g, 2.0);
  Field b = Field::constant(g, -0.5);
  CHECK((a + b).mean() == Catch::Approx(1.5));
  CHECK((a - b).mean() == Catch::Approx(2.5));
  CHECK((3.0 * b).mean() == Catch::Approx(-1.5));
  CHECK(Field::constant(g, 2.0).coefficient_norm() == Catch::Approx(2.0));
}
