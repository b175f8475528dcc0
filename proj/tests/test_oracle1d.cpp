// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Independent 1D collocation oracle: bifurcation threshold formula, profile
// quality (residual, mass, symmetry), mesh robustness, failure modes, and
// consistency of the embedded profile with the 2D machinery.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "aclab/oracle1d.hpp"
#include "aclab/operators.hpp"

using namespace aclab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("first bifurcation eps on the circle", "[oracle1d]") {
  Potential pot = double_well();
  // nu = 0, period 1: eps_1 = sqrt(-W''(0)) / (2 pi) = 1 / (2 pi).
  CHECK(first_bifurcation_eps(pot, 0.0, 1.0) ==
        Catch::Approx(1.0 / (2.0 * kPi)).margin(1e-15));
  // Doubling the period doubles the threshold.
  CHECK(first_bifurcation_eps(pot, 0.0, 2.0) ==
        Catch::Approx(1.0 / kPi).margin(1e-15));
  // nu = 0.1 on period 1 matches the torus constant-branch value.
  CHECK(first_bifurcation_eps(pot, 0.1, 1.0) ==
        Catch::Approx(0.15674944029650284).margin(1e-15));
  // Convex region: no bifurcation at any eps.
  CHECK(std::isnan(first_bifurcation_eps(pot, 1.5, 1.0)));
}

TEST_CASE("periodic profile at 0.9 eps1", "[oracle1d]") {
  Potential pot = double_well();
  const double eps = 0.9 / (2.0 * kPi);
  Profile1D p = solve_periodic(pot, eps, 0.0, 1.0, 512);

  CHECK(p.period == 1.0);
  CHECK(p.residual <= 1e-10);
  CHECK(p.values.size() == 512);

  // Mass constraint: the uniform mesh is the exact quadrature here.
  double sum = 0.0;
  for (double v : p.values) sum += v;
  CHECK(std::abs(sum / 512.0) <= 1e-10);

  // The nu = 0 branch is odd-harmonic: u(x + 1/2) = -u(x), lambda = 0.
  CHECK(std::abs(p.lambda) <= 1e-10);
  double antisym = 0.0;
  for (std::size_t j = 0; j < 512; ++j)
    antisym = std::max(antisym, std::abs(p.values[(j + 256) % 512] + p.values[j]));
  CHECK(antisym <= 1e-8);

  // Nonconstant, with the pitchfork amplitude.
  const auto c = profile_coefficients(p, 7);
  CHECK(std::abs(c[0]) <= 1e-10);
  const double a_predicted = std::sqrt((4.0 / 3.0) * (1.0 - 4.0 * kPi * kPi * eps * eps));
  CHECK(std::abs(2.0 * std::abs(c[1]) - a_predicted) <= 5e-3);
  CHECK(std::abs(c[3]) < std::abs(c[1]));
  CHECK(std::abs(c[2]) <= 1e-10);  // even harmonics vanish on this branch

  // Mesh refinement does not move the multiplier or the amplitude.
  Profile1D q = solve_periodic(pot, eps, 0.0, 1.0, 256);
  CHECK(std::abs(q.lambda - p.lambda) <= 1e-8);
  const auto cq = profile_coefficients(q, 1);
  CHECK(std::abs(std::abs(cq[1]) - std::abs(c[1])) <= 1e-10);
}

TEST_CASE("oracle failure modes", "[oracle1d]") {
  Potential pot = double_well();
  // At or above the bifurcation point only the constant exists.
  CHECK_THROWS_AS(solve_periodic(pot, 0.16, 0.0, 1.0, 256), NotFound);
  CHECK_THROWS_AS(solve_periodic(pot, 1.0 / (2.0 * kPi), 0.0, 1.0, 256), NotFound);
  // Mesh validation.
  CHECK_THROWS_AS(solve_periodic(pot, 0.1, 0.0, 1.0, 128), std::invalid_argument);
  CHECK_THROWS_AS(solve_periodic(pot, 0.1, 0.0, 1.0, 257), std::invalid_argument);
}

TEST_CASE("embedded profile solves the 2D problem", "[oracle1d]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const double eps = 0.9 / (2.0 * kPi);

  Profile1D p = solve_periodic(pot, eps, 0.0, 1.0, 512);
  const auto c = profile_coefficients(p, geo.grid().kmax());

  Field u(geo.grid());
  u.set_mean(c[0].real());
  for (int k = 1; k <= geo.grid().kmax(); ++k)
    u.set_coefficient({k, 0, 0}, c[static_cast<std::size_t>(k)]);

  AugmentedField grad = lagrangian_gradient(geo, eps, pot, u, p.lambda, 0.0);
  CHECK(primed_norm(geo, eps, grad) <= 1e-7);
}
