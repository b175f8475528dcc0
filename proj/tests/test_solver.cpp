// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Nonlinear solver layer: Newton convergence and equivariance, the bifurcation
// amplitude law on the stripe branch, the mass-conserving flow, singularity
// reporting, and continuation-based degeneracy bracketing.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "aclab/degeneracy.hpp"
#include "aclab/solver.hpp"
#include "aclab/rng.hpp"

using namespace aclab;

namespace {
constexpr double kPi = std::numbers::pi;

Field cosine_init(const TorusGrid& g, double amp, int axis = 0) {
  Field f(g);
  std::array<int, 3> k{0, 0, 0};
  k[axis] = 1;
  f.set_coefficient(k, cplx(0.5 * amp, 0.0));
  return f;
}
}  // namespace

TEST_CASE("stripe branch follows the pitchfork amplitude law", "[solver]") {
  // For W' = u^3 - u on the flat torus with nu = 0, the mode-1 balance
  //   eps^2 4 pi^2 a - a + (3/4) a^3 + O(a^5) = 0
  // gives amplitude a^2 = (4/3)(1 - 4 pi^2 eps^2) up to higher harmonics.
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const double eps1 = 1.0 / (2.0 * kPi);
  const double eps = 0.9 * eps1;

  Solution sol = newton_solve(geo, eps, pot, 0.0, cosine_init(geo.grid(), 0.5), 0.0);
  CHECK(sol.residual <= 1e-10);
  CHECK(std::abs(geo.integrate(sol.u)) <= 1e-12);
  CHECK(std::abs(sol.lambda) <= 1e-10);  // odd branch: multiplier vanishes
  CHECK(sol.contraction_ok);

  const double a = 2.0 * std::abs(sol.u.coefficient({1, 0, 0}).real());
  const double a_predicted = std::sqrt((4.0 / 3.0) * (1.0 - 4.0 * kPi * kPi * eps * eps));
  CHECK(std::abs(a - a_predicted) <= 5e-3);  // truncated law: O(a^4) ~ 2.4e-3 here

  // The profile depends on x1 only.
  double off_axis = 0.0;
  detail::for_each_band_mode(geo.grid(), [&](const std::array<int, 3>& k) {
    if (k[1] != 0) off_axis += std::norm(sol.u.coefficient(k));
  });
  CHECK(std::sqrt(off_axis) <= 1e-10);
}

TEST_CASE("newton is equivariant under translation", "[solver]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const double eps = 0.14;

  Solution base = newton_solve(geo, eps, pot, 0.0, cosine_init(geo.grid(), 0.5), 0.0);
  const std::array<double, 3> s{0.137, 0.41, 0.0};
  Solution moved = newton_solve(geo, eps, pot, 0.0, base.u.translated(s), base.lambda);
  CHECK((moved.u - base.u.translated(s)).coefficient_norm() <= 1e-8);
  CHECK(moved.lambda == Catch::Approx(base.lambda).margin(1e-10));
}

TEST_CASE("newton converges in zero iterations at an exact solution", "[solver]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const auto [u, lambda] = constant_solution(geo, pot, 0.1);
  Solution sol = newton_solve(geo, 0.3, pot, 0.1, u, lambda);
  CHECK(sol.iterations == 0);
  CHECK(sol.residual <= 1e-12);
  CHECK(sol.contraction_ok);
}

TEST_CASE("newton reports a singular Jacobian at a degenerate point", "[solver]") {
  // At eps with eps^2 theta_1 = -W''(c) the constant state is rank-deficient;
  // starting Newton exactly there (with a wrong multiplier so it must
  // iterate) has to fail loudly rather than silently stall.
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const double nu = 0.3;
  const auto pred = degenerate_epsilons(geo.spec(), pot, nu, 1);
  REQUIRE(pred.size() == 1u);
  Field c = Field::constant(geo.grid(), nu / geo.volume());
  CHECK_THROWS_AS(newton_solve(geo, pred[0].eps, pot, nu, c, 0.0), SingularJacobian);
}

TEST_CASE("gradient flow conserves mass and decreases energy", "[solver]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  Rng rng(21);
  Field init = rng.smooth_field(geo.grid(), 0.8, 2.0, 0.0);
  const double nu = 0.1, eps = 0.13;

  auto energy = [&](const Field& u) {
    double e = 0.5 * eps * eps * geo.dirichlet_form(u, u);
    const auto uv = u.oversampled_values();
    const auto& rho = geo.quad_weight();
    double w = 0.0;
    for (std::size_t q = 0; q < uv.size(); ++q) w += pot.W(uv[q].real()) * rho[q];
    return e + w * geo.quad_norm();
  };

  Field start = init;
  start += Field::constant(geo.grid(), (nu - geo.integrate(init)) / geo.volume());
  const double e0 = energy(start);

  Field u = gradient_flow(geo, eps, pot, nu, init, 25, 0.5);
  CHECK(std::abs(geo.integrate(u) - nu) <= 1e-12);
  CHECK(energy(u) <= e0 + 1e-12);

  // The flow output seeds Newton reliably.
  Solution sol = newton_solve(geo, eps, pot, nu, u, 0.0);
  CHECK(sol.residual <= 1e-10);
  CHECK(std::abs(geo.integrate(sol.u) - nu) <= 1e-10);
}

TEST_CASE("continuation brackets the first degenerate eps", "[solver]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const double nu = 0.1;
  const auto [u0, l0] = constant_solution(geo, pot, nu);
  Solution start = newton_solve(geo, 0.18, pot, nu, u0, l0);

  std::vector<double> targets;
  for (double e = 0.178; e >= 0.1399; e -= 0.002) targets.push_back(e);
  ContinuationResult res = continuation(geo, pot, nu, start, targets);
  CHECK(res.solutions.size() == targets.size());

  const double eps1 = 0.15674944029650284;  // sqrt(0.97 / (4 pi^2))
  bool bracketed = false;
  for (const auto& b : res.brackets) {
    if (b.lo <= eps1 && eps1 <= b.hi) {
      bracketed = true;
      CHECK(std::abs(b.eps_refined - eps1) <= 1e-6);
      CHECK(b.sigma_refined <= 1e-5);  // refinement interval width 1e-6, slope O(6)
    }
  }
  CHECK(bracketed);
}

TEST_CASE("3d solve exercises the matrix-free path", "[solver]") {
  // The augmented dimension (15^3 + 1) exceeds the dense limit, so Newton has
  // to run GMRES; above the first bifurcation the constant is the unique
  // nearby solution and a small perturbation must return to it.
  Geometry geo(ManifoldSpec::flat_torus(3, 16));
  Potential pot = double_well();
  const double nu = 0.5;
  const double c = nu / geo.volume();

  Field init = Field::constant(geo.grid(), c);
  init.set_coefficient({1, 0, 0}, cplx(0.02, 0.0));
  init.set_coefficient({0, 1, 1}, cplx(0.0, 0.015));

  Solution sol = newton_solve(geo, 0.3, pot, nu, init, 0.0);
  CHECK(sol.residual <= 1e-10);
  Field fluct = sol.u;
  fluct.set_mean(0.0);
  CHECK(fluct.coefficient_norm() <= 1e-9);
  CHECK(sol.lambda == Catch::Approx(pot.dW(c)).margin(1e-9));
}

TEST_CASE("conformal metric solve converges with the dense-Gram path", "[solver]") {
  auto spec = ManifoldSpec::torus(2, 16, Eigen::MatrixXd::Identity(2, 2), {{{0, 1, 0}, 0.2}});
  Geometry geo(spec);
  Potential pot = double_well();
  const double eps = 0.1;

  Solution sol = newton_solve(geo, eps, pot, 0.1, cosine_init(geo.grid(), 0.6), 0.0);
  CHECK(sol.residual <= 1e-10);
  CHECK(std::abs(geo.integrate(sol.u) - 0.1) <= 1e-10);
  CHECK(sol.contraction_ok);
  Field fluct = sol.u;
  fluct.set_mean(0.0);
  CHECK(fluct.coefficient_norm() >= 0.1);  // genuinely nonconstant
}
