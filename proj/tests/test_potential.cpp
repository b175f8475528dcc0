// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Nonlinearity layer: the double well, user polynomials, and the subcritical
// growth validation gate.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "aclab/potential.hpp"

using namespace aclab;

TEST_CASE("double well values and derivatives", "[potential]") {
  Potential w = double_well();
  CHECK(w.name == "double_well");
  CHECK(w.W(0.0) == Catch::Approx(0.25));
  CHECK(w.W(1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(w.W(-1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(w.dW(0.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(w.dW(1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(w.dW(2.0) == Catch::Approx(6.0));   // t^3 - t
  CHECK(w.d2W(0.0) == Catch::Approx(-1.0));
  CHECK(w.d2W(1.0) == Catch::Approx(2.0));  // 3 t^2 - 1
  CHECK(w.eval(0.5, 0) == Catch::Approx(w.W(0.5)));
  CHECK(w.eval(0.5, 1) == Catch::Approx(w.dW(0.5)));
  CHECK(w.eval(0.5, 2) == Catch::Approx(w.d2W(0.5)));
  CHECK(w.p == Catch::Approx(4.0));
}

TEST_CASE("polynomial potential reproduces the double well", "[potential]") {
  // (t^2-1)^2/4 = 1/4 - t^2/2 + t^4/4, coefficients low-to-high.
  Potential p = polynomial_potential({0.25, 0.0, -0.5, 0.0, 0.25}, -2.0, 2.0);
  Potential w = double_well();
  for (double t : {-1.7, -0.3, 0.0, 0.4, 1.9}) {
    CHECK(p.W(t) == Catch::Approx(w.W(t)).margin(1e-14));
    CHECK(p.dW(t) == Catch::Approx(w.dW(t)).margin(1e-14));
    CHECK(p.d2W(t) == Catch::Approx(w.d2W(t)).margin(1e-14));
  }
}

TEST_CASE("growth validation accepts quartics and rejects bad exponents", "[potential]") {
  GrowthReport ok2 = validate_growth(double_well(), 2, -10.0, 10.0);
  CHECK(ok2.ok);
  GrowthReport ok3 = validate_growth(double_well(), 3, -10.0, 10.0);
  CHECK(ok3.ok);  // p = 4 < 2n/(n-2) = 6 for n = 3

  // A sextic declares p = 6, which is exactly critical in three dimensions.
  Potential sext = polynomial_potential({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0}, -3.0, 3.0);
  CHECK(sext.p == Catch::Approx(6.0));
  CHECK(validate_growth(sext, 2, -3.0, 3.0).ok);
  GrowthReport bad = validate_growth(sext, 3, -3.0, 3.0);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.message.empty());

  // A quadratic has p = 2, below the admissible window.
  Potential quad = polynomial_potential({0.0, 0.0, 1.0}, -3.0, 3.0);
  CHECK_FALSE(validate_growth(quad, 2, -3.0, 3.0).ok);

  CHECK_THROWS_AS(validate_growth(double_well(), 2, -1.0, 1.0, 10), std::invalid_argument);
}
