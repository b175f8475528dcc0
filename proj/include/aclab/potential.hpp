// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aclab/field.hpp"

namespace aclab {

/// Nonlinearity W with its first two derivatives and growth parameters.
/// Evaluators are plain std::functions so tests can construct ad-hoc
/// potentials (including ones that violate the growth bounds).
struct Potential {
  std::function<double(double)> W;
  std::function<double(double)> dW;
  std::function<double(double)> d2W;
  double p = 4.0;
  double K1 = 3.0;
  double K2 = 3.0;
  std::string name = "custom";

  double eval(double t, int order) const {
    switch (order) {
      case 0: return W(t);
      case 1: return dW(t);
      case 2: return d2W(t);
      default: throw std::invalid_argument("potential derivative order must be 0, 1, or 2");
    }
  }
};

/// The canonical double well W(t) = (t^2 - 1)^2 / 4.
inline Potential double_well() {
  Potential pot;
  pot.W = [](double t) { return 0.25 * (t * t - 1.0) * (t * t - 1.0); };
  pot.dW = [](double t) { return t * t * t - t; };
  pot.d2W = [](double t) { return 3.0 * t * t - 1.0; };
  pot.p = 4.0;
  pot.K1 = 3.0;
  pot.K2 = 3.0;
  pot.name = "double_well";
  return pot;
}

namespace detail {

inline double polyval(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
  return v;
}

inline std::vector<double> polyder(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

}  // namespace detail

/// User polynomial W given by coefficients (low to high degree). Derivatives
/// are derived symbolically; K1/K2 are fitted as the smallest constants that
/// satisfy the growth bounds on the declared range (with 10% headroom).
inline Potential polynomial_potential(const std::vector<double>& coefficients, double fit_lo,
                                      double fit_hi, int samples = 2001) {
  if (coefficients.size() < 3)
    throw std::invalid_argument("polynomial potential needs degree >= 2");
  if (!(fit_hi > fit_lo)) throw std::invalid_argument("invalid fit range");
  Potential pot;
  const auto c0 = coefficients;
  const auto c1 = detail::polyder(c0);
  const auto c2 = detail::polyder(c1);
  pot.W = [c0](double t) { return detail::polyval(c0, t); };
  pot.dW = [c1](double t) { return detail::polyval(c1, t); };
  pot.d2W = [c2](double t) { return detail::polyval(c2, t); };
  pot.p = static_cast<double>(coefficients.size() - 1);
  double k1 = 0.0, k2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = fit_lo + (fit_hi - fit_lo) * i / (samples - 1);
    k1 = std::max(k1, std::abs(pot.dW(t)) / (1.0 + std::pow(std::abs(t), pot.p - 1.0)));
    k2 = std::max(k2, std::abs(pot.d2W(t)) / (1.0 + std::pow(std::abs(t), pot.p - 2.0)));
  }
  pot.K1 = 1.1 * k1 + std::numeric_limits<double>::epsilon();
  pot.K2 = 1.1 * k2 + std::numeric_limits<double>::epsilon();
  pot.name = "polynomial";
  return pot;
}

struct GrowthReport {
  bool ok = true;
  double worst_ratio = 0.0;
  double worst_t = 0.0;
  std::string message;
};

/// Check the subcritical growth bounds |W'(t)| <= K1 (1 + |t|^{p-1}) and
/// |W''(t)| <= K2 (1 + |t|^{p-2}) on a sample grid, plus the exponent window
/// 2 < p < p_n (p_n = infinity for n = 2, 2n/(n-2) for n >= 3).
inline GrowthReport validate_growth(const Potential& pot, int n_dim, double lo, double hi,
                                    int samples = 1000) {
  if (samples < 100) throw std::invalid_argument("growth validation needs >= 100 samples");
  GrowthReport rep;
  if (!(pot.p > 2.0)) {
    rep.ok = false;
    rep.message = "growth exponent p must exceed 2";
    return rep;
  }
  if (n_dim >= 3) {
    const double p_n = 2.0 * n_dim / (n_dim - 2.0);
    if (!(pot.p < p_n)) {
      rep.ok = false;
      rep.message = "growth exponent p is supercritical for this dimension";
      return rep;
    }
  }
  for (int i = 0; i < samples; ++i) {
    const double t = lo + (hi - lo) * i / (samples - 1);
    const double r1 = std::abs(pot.dW(t)) / (pot.K1 * (1.0 + std::pow(std::abs(t), pot.p - 1.0)));
    const double r2 = std::abs(pot.d2W(t)) / (pot.K2 * (1.0 + std::pow(std::abs(t), pot.p - 2.0)));
    const double r = std::max(r1, r2);
    if (r > rep.worst_ratio) {
      rep.worst_ratio = r;
      rep.worst_t = t;
    }
  }
  if (rep.worst_ratio > 1.0) {
    rep.ok = false;
    rep.message = "growth bound violated at t = " + std::to_string(rep.worst_t);
  }
  return rep;
}

/// Pointwise lambda + u - W'(u), de-aliased (2x oversampled evaluation
/// truncated back to the band).
inline Field reaction(const Potential& pot, const Field& u, double lambda) {
  auto vals = u.oversampled_values();
  for (auto& v : vals) {
    const double t = v.real();
    v = cplx(lambda + t - pot.dW(t), 0.0);
  }
  return Field::from_oversampled_values(u.grid(), vals);
}

/// Derivative of the reaction map: pointwise Lambda + v - v W''(u), de-aliased.
inline Field reaction_derivative(const Potential& pot, const Field& u, const Field& v,
                                 double Lambda) {
  auto uv = u.oversampled_values();
  auto vv = v.oversampled_values();
  for (std::size_t q = 0; q < uv.size(); ++q) {
    const double w2 = pot.d2W(uv[q].real());
    uv[q] = cplx(Lambda + vv[q].real() * (1.0 - w2), 0.0);
  }
  return Field::from_oversampled_values(u.grid(), uv);
}

}  // namespace aclab
