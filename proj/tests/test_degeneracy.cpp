// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Degeneracy layer: analytic predictions on the constant branch, singular-value
// classification, kernel extraction and cross-checks against the constrained
// Hessian, the adjoint (cokernel) identity, and Morse lower bounds.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "aclab/degeneracy.hpp"
#include "aclab/solver.hpp"

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

/// Coefficient mass of a field restricted to wavevectors with |k|^2 == q.
double mode_shell_norm2(const Field& u, int q) {
  double s = 0.0;
  detail::for_each_band_mode(u.grid(), [&](const std::array<int, 3>& k) {
    if (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] == q) s += std::norm(u.coefficient(k));
  });
  return s;
}
}  // namespace

TEST_CASE("sigma classification thresholds", "[degeneracy]") {
  CHECK(classify_sigma(1e-9, 1.0) == DegeneracyClass::degenerate);
  CHECK(classify_sigma(5e-8, 1.0) == DegeneracyClass::marginal);
  CHECK(classify_sigma(1e-6, 1.0) == DegeneracyClass::nondegenerate);
  // Boundary is strict: exactly tau falls in the marginal band.
  CHECK(classify_sigma(1e-8, 1.0) == DegeneracyClass::marginal);
  // Relative, not absolute: sigma_min below tau in absolute terms is still
  // nondegenerate when sigma_max is small too.
  CHECK(classify_sigma(1e-9, 1e-4) == DegeneracyClass::nondegenerate);
  CHECK(classify_sigma(5e-12, 1e-4) == DegeneracyClass::marginal);
  // Custom tolerance.
  CHECK(classify_sigma(1e-4, 1.0, 1e-3) == DegeneracyClass::degenerate);
  CHECK(to_string(DegeneracyClass::marginal) == std::string("marginal"));
}

TEST_CASE("predicted degenerate epsilons on the flat torus", "[degeneracy]") {
  // c = nu / vol = 0.1, W''(c) = 3c^2 - 1 = -0.97, eps_j = sqrt(0.97 / theta_j)
  // with theta_j = 4 pi^2 q over the distinct lattice values q.
  ManifoldSpec spec = ManifoldSpec::flat_torus(2, 16);
  auto pred = degenerate_epsilons(spec, double_well(), 0.1, 4);
  REQUIRE(pred.size() == 4);

  CHECK(pred[0].eps == Catch::Approx(0.15674944029650284).margin(1e-15));
  CHECK(pred[0].eigenvalue == Catch::Approx(4.0 * kPi * kPi).margin(1e-11));
  CHECK(pred[0].multiplicity == 4);

  CHECK(pred[1].eps == Catch::Approx(0.11083859218085303).margin(1e-15));
  CHECK(pred[1].eigenvalue == Catch::Approx(8.0 * kPi * kPi).margin(1e-11));
  CHECK(pred[1].multiplicity == 4);

  CHECK(pred[2].eps == Catch::Approx(0.07837472014825142).margin(1e-15));
  CHECK(pred[2].eigenvalue == Catch::Approx(16.0 * kPi * kPi).margin(1e-10));
  CHECK(pred[2].multiplicity == 4);

  CHECK(pred[3].eps == Catch::Approx(0.07010048078760503).margin(1e-15));
  CHECK(pred[3].eigenvalue == Catch::Approx(20.0 * kPi * kPi).margin(1e-10));
  CHECK(pred[3].multiplicity == 8);

  for (std::size_t j = 1; j < pred.size(); ++j) CHECK(pred[j].eps < pred[j - 1].eps);

  // Convex region of W: no sign change in the linearization, no predictions.
  CHECK(degenerate_epsilons(spec, double_well(), 1.5, 4).empty());
}

TEST_CASE("predicted degenerate epsilons on the round sphere", "[degeneracy]") {
  // c = 0, W''(0) = -1, theta_l = l(l+1): eps_1 = 1/sqrt(2), eps_2 = 1/sqrt(6).
  ManifoldSpec spec = ManifoldSpec::sphere(1.0, 16);
  auto pred = degenerate_epsilons(spec, double_well(), 0.0, 2);
  REQUIRE(pred.size() == 2);
  CHECK(pred[0].eps == Catch::Approx(0.7071067811865476).margin(1e-15));
  CHECK(pred[0].multiplicity == 3);
  CHECK(pred[1].eps == Catch::Approx(0.4082482904638631).margin(1e-15));
  CHECK(pred[1].multiplicity == 5);
  CHECK(pred[1].eps < pred[0].eps);
}

TEST_CASE("min_singular at a nondegenerate constant", "[degeneracy]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  auto [u, lambda] = constant_solution(geo, pot, 0.1);
  static_cast<void>(lambda);

  DegeneracyReport rep = min_singular(geo, 0.2, pot, u);
  CHECK(rep.kernel_dimension == 0);
  CHECK(rep.classification == DegeneracyClass::nondegenerate);
  CHECK(rep.kernel.empty());
  CHECK(rep.sigma_min > 0.1);  // analytic min over mode factors is ~0.236

  // Constant input: the analytic criterion predictions ride along.
  REQUIRE(rep.predicted.has_value());
  REQUIRE(rep.predicted->size() == 6);
  CHECK((*rep.predicted)[0].eps == Catch::Approx(0.15674944029650284).margin(1e-15));
  CHECK((*rep.predicted)[0].multiplicity == 4);

  // Nonconstant input: no predictions attached.
  Field bent = u;
  bent += cosine_init(geo.grid(), 0.05);
  DegeneracyReport rep2 = min_singular(geo, 0.2, pot, bent);
  CHECK_FALSE(rep2.predicted.has_value());
}

TEST_CASE("min_singular at the first degenerate epsilon", "[degeneracy]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  auto [u, lambda] = constant_solution(geo, pot, 0.1);
  static_cast<void>(lambda);
  const double eps1 = 0.15674944029650284;

  DegeneracyReport rep = min_singular(geo, eps1, pot, u);
  CHECK(rep.kernel_dimension == 4);
  CHECK(rep.classification == DegeneracyClass::degenerate);
  CHECK(rep.sigma_min <= 1e-12 * rep.sigma_max);
  REQUIRE(rep.kernel.size() == 4);

  // Kernel vectors live on the |k|^2 = 1 shell with vanishing multiplier part.
  for (const AugmentedField& w : rep.kernel) {
    const double total = w.field.coefficient_norm();
    const double shell = std::sqrt(mode_shell_norm2(w.field, 1));
    CHECK(std::abs(w.scalar) <= 1e-8 * total);
    CHECK(shell >= (1.0 - 1e-12) * total);
    CHECK(std::abs(w.field.mean()) <= 1e-12 * total);
  }

  // The smallest tail starts with the four vanishing values.
  REQUIRE(rep.smallest.size() >= 5);
  CHECK(rep.smallest[3] <= 1e-12 * rep.sigma_max);
  CHECK(rep.smallest[4] > 1e-6 * rep.sigma_max);
}

TEST_CASE("hessian kernel matches the augmented near-kernel", "[degeneracy]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  auto [u, lambda] = constant_solution(geo, pot, 0.1);
  static_cast<void>(lambda);
  const double eps1 = 0.15674944029650284;

  DegeneracyReport rep = min_singular(geo, eps1, pot, u);
  std::vector<Field> hker = hessian_kernel(geo, eps1, pot, u);
  REQUIRE(rep.kernel.size() == 4);
  REQUIRE(hker.size() == 4);

  // Each constrained-Hessian kernel field lies in the span of the augmented
  // kernel (and vice versa: equal dimensions + inclusion).
  for (const Field& h : hker) {
    const double ang = subspace_angle(geo, eps1, rep.kernel, AugmentedField{h, 0.0});
    CHECK(ang <= 1e-8);
  }

  // Away from the degenerate point the constrained Hessian has no kernel.
  CHECK(hessian_kernel(geo, 0.2, pot, u).empty());
}

TEST_CASE("stripe kernel is the translation mode", "[degeneracy]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  const double eps = 0.9 / (2.0 * kPi);

  Solution sol = newton_solve(geo, eps, pot, 0.0, cosine_init(geo.grid(), 0.5), 0.0);
  REQUIRE(sol.residual <= 1e-10);

  DegeneracyReport rep = min_singular(geo, eps, pot, sol.u);
  CHECK(rep.kernel_dimension == 1);
  CHECK(rep.classification == DegeneracyClass::degenerate);
  REQUIRE(rep.kernel.size() == 1);

  // d/ds u(x + s e1) at s = 0 spans the kernel.
  AugmentedField trans{sol.u.derivative(0), 0.0};
  CHECK(subspace_angle(geo, eps, rep.kernel, trans) <= 1e-8);
}

TEST_CASE("cokernel dimensions and adjoint residuals", "[degeneracy]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  Potential pot = double_well();
  auto [u, lambda] = constant_solution(geo, pot, 0.1);
  static_cast<void>(lambda);

  SECTION("nondegenerate constant") {
    CokernelReport rep = cokernel_check(geo, 0.2, pot, u);
    CHECK(rep.left_dimension == 0);
    CHECK(rep.kernel_dimension == 0);
    CHECK(rep.dimensions_match);
    CHECK(rep.consistent);
  }

  SECTION("degenerate constant") {
    CokernelReport rep = cokernel_check(geo, 0.15674944029650284, pot, u);
    CHECK(rep.left_dimension == 4);
    CHECK(rep.kernel_dimension == 4);
    CHECK(rep.dimensions_match);
    CHECK(rep.max_residual <= 1e-8);
    CHECK(rep.consistent);
  }

  SECTION("striped solution") {
    const double eps = 0.9 / (2.0 * kPi);
    Solution sol = newton_solve(geo, eps, pot, 0.0, cosine_init(geo.grid(), 0.5), 0.0);
    CokernelReport rep = cokernel_check(geo, eps, pot, sol.u);
    CHECK(rep.kernel_dimension >= 1);
    CHECK(rep.dimensions_match);
    CHECK(rep.max_residual <= 1e-8);
    CHECK(rep.consistent);
  }
}

TEST_CASE("morse lower bounds", "[degeneracy]") {
  CHECK(morse_lower_bound(ManifoldSpec::flat_torus(2, 16)) == 4);
  CHECK(morse_lower_bound(ManifoldSpec::flat_torus(3, 16)) == 8);
  CHECK(morse_lower_bound(ManifoldSpec::sphere(1.0, 16)) == 2);
}

TEST_CASE("subspace angle edge cases", "[degeneracy]") {
  Geometry geo(ManifoldSpec::flat_torus(2, 16));
  const double eps = 0.1;

  AugmentedField a{cosine_init(geo.grid(), 1.0, 0), 0.0};
  AugmentedField b{cosine_init(geo.grid(), 1.0, 1), 0.0};

  CHECK(subspace_angle(geo, eps, {}, a) == Catch::Approx(kPi / 2.0));
  CHECK(subspace_angle(geo, eps, {a}, b) == Catch::Approx(kPi / 2.0).margin(1e-7));
  CHECK(subspace_angle(geo, eps, {a}, a) <= 1e-7);

  // Scaling the target does not change the angle.
  AugmentedField a_scaled = a;
  a_scaled.field *= 2.5;
  CHECK(subspace_angle(geo, eps, {a}, a_scaled) <= 1e-7);
}
