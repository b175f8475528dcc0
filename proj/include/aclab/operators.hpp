// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "aclab/manifold.hpp"
#include "aclab/potential.hpp"

namespace aclab {

/// Element of the augmented space (field, multiplier coordinate).
struct AugmentedField {
  Field field;
  double scalar = 0.0;
};

/// H1 inner product: integral of g(grad u, grad v) + u v dmu.
inline double inner_h1(const Geometry& geo, const Field& u, const Field& v) {
  return geo.dirichlet_form(u, v) + geo.mass_form(u, v);
}

/// Energy inner product E_eps: eps^2 Dirichlet + mass.
inline double energy_inner(const Geometry& geo, double eps, const Field& u, const Field& v) {
  return eps * eps * geo.dirichlet_form(u, v) + geo.mass_form(u, v);
}

/// Primed inner product on the augmented space: E_eps(u1,u2) + t1 t2.
inline double primed_inner(const Geometry& geo, double eps, const AugmentedField& a,
                           const AugmentedField& b) {
  return energy_inner(geo, eps, a.field, b.field) + a.scalar * b.scalar;
}

inline double primed_norm(const Geometry& geo, double eps, const AugmentedField& a) {
  return std::sqrt(primed_inner(geo, eps, a, a));
}

/// Resolvent: the unique w with E_eps(w, v) = integral(f v dmu) for all band v.
/// Diagonal multiplier 1/(1 + eps^2 alpha_k) for phi = 0, PCG otherwise.
inline Field apply_resolvent(const Geometry& geo, double eps, const Field& f) {
  return geo.solve_energy(eps, geo.mass_weak(f));
}

/// Metric variation direction: the path is G + t H with conformal exponent
/// phi + t psi / 2, so the metric velocity is h = exp(2 phi) H + psi g.
/// psi (cosine modes) is supported on 2D tori only, like phi itself.
struct MetricDirection {
  Eigen::MatrixXd H;
  std::vector<ConformalMode> psi;

  static MetricDirection constant(Eigen::MatrixXd H) { return {std::move(H), {}}; }
  static MetricDirection conformal(std::vector<ConformalMode> psi, int dim) {
    return {Eigen::MatrixXd::Zero(dim, dim), std::move(psi)};
  }
};

/// Manifold displaced along (direction) by parameter t — the evaluation path
/// used by finite-difference checks of the derivative formulas.
inline ManifoldSpec displaced_spec(const ManifoldSpec& base, const MetricDirection& dir,
                                   double t) {
  ManifoldSpec m = base;
  m.metric.G = base.metric.G + t * dir.H;
  for (const auto& mode : dir.psi)
    m.metric.phi.push_back({mode.wavevector, 0.5 * t * mode.amplitude});
  m.validate();
  return m;
}

/// Flat-chart matrix of the Dirichlet variation tensor b_{g,h} for a constant
/// direction H: tr(G^{-1} H) G^{-1} / 2 − G^{-1} H G^{-1}.
inline Eigen::MatrixXd dirichlet_variation_tensor(const Eigen::MatrixXd& G,
                                                  const Eigen::MatrixXd& H) {
  Eigen::MatrixXd Ginv = G.inverse();
  return 0.5 * (Ginv * H).trace() * Ginv - Ginv * H * Ginv;
}

namespace detail {

/// Pointwise values of tr_g h on the quadrature grid: tr(G^{-1}H) + d * psi.
inline std::vector<double> trace_h_values(const Geometry& geo, const MetricDirection& dir) {
  const double tr = (geo.metric_inverse() * dir.H).trace();
  std::vector<double> vals(geo.quad_weight().size(), tr);
  if (!dir.psi.empty()) {
    const auto psi_vals = cosine_field(geo.grid(), dir.psi).oversampled_values();
    for (std::size_t q = 0; q < vals.size(); ++q)
      vals[q] += geo.grid().dim * psi_vals[q].real();
  }
  return vals;
}

}  // namespace detail

/// First variation of the energy inner product along (eta, h):
///   dE[eta,h](u,v) = 2 eps eta Dir(u,v) + eps^2 b-term + (1/2) tr-term.
/// In this discrete model the b-term reduces to the flat-chart contraction
/// with b(G,H) for every supported direction (2D conformal terms drop out of
/// the gradient part; 3D runs carry no conformal factor).
inline double energy_inner_variation(const Geometry& geo, double eps, double eta,
                                     const MetricDirection& dir, const Field& u,
                                     const Field& v) {
  double value = 2.0 * eps * eta * geo.dirichlet_form(u, v);
  const Eigen::MatrixXd b = dirichlet_variation_tensor(geo.spec().metric.G, dir.H);
  value += eps * eps * geo.flat_gradient_form(b, u, v);
  const auto trh = detail::trace_h_values(geo, dir);
  const auto uv = u.oversampled_values();
  const auto vv = v.oversampled_values();
  const auto& rho = geo.quad_weight();
  double mass_term = 0.0;
  for (std::size_t q = 0; q < trh.size(); ++q)
    mass_term += trh[q] * uv[q].real() * vv[q].real() * rho[q];
  value += 0.5 * mass_term * geo.quad_norm();
  return value;
}

/// First variation of the resolvent applied to fixed weak data (pointwise
/// values fq on the quadrature grid), via the identity
///   E(dA f, v) = (1/2) integral(tr_g h · f v dmu) − dE[eta,h](A f, v).
inline Field resolvent_variation_weak(const Geometry& geo, double eps, double eta,
                                      const MetricDirection& dir,
                                      const std::vector<cplx>& f_values) {
  Field w = geo.solve_energy(eps, geo.pointwise_weak(f_values));
  const auto trh = detail::trace_h_values(geo, dir);
  const auto wv = w.oversampled_values();
  std::vector<cplx> rhs(trh.size());
  for (std::size_t q = 0; q < trh.size(); ++q)
    rhs[q] = cplx(0.5 * trh[q] * (f_values[q].real() - wv[q].real()), 0.0);
  Field data = geo.pointwise_weak(rhs);
  Field dw = geo.dirichlet_weak(w);
  dw *= 2.0 * eps * eta;
  data -= dw;
  const Eigen::MatrixXd b = dirichlet_variation_tensor(geo.spec().metric.G, dir.H);
  Field bw = geo.flat_gradient_weak(b, w);
  bw *= eps * eps;
  data -= bw;
  return geo.solve_energy(eps, data);
}

/// Resolvent variation for a band field input.
inline Field resolvent_variation(const Geometry& geo, double eps, double eta,
                                 const MetricDirection& dir, const Field& f) {
  return resolvent_variation_weak(geo, eps, eta, dir, f.oversampled_values());
}

namespace detail {

/// Pointwise reaction values lambda + u - W'(u) on the quadrature grid.
inline std::vector<cplx> reaction_values(const Potential& pot, const Field& u, double lambda) {
  auto vals = u.oversampled_values();
  for (auto& v : vals) {
    const double t = v.real();
    v = cplx(lambda + t - pot.dW(t), 0.0);
  }
  return vals;
}

/// Pointwise reaction-derivative values Lambda + v (1 - W''(u)).
inline std::vector<cplx> reaction_derivative_values(const Potential& pot, const Field& u,
                                                    const Field& v, double Lambda) {
  auto uv = u.oversampled_values();
  auto vv = v.oversampled_values();
  for (std::size_t q = 0; q < uv.size(); ++q)
    uv[q] = cplx(Lambda + vv[q].real() * (1.0 - pot.d2W(uv[q].real())), 0.0);
  return uv;
}

}  // namespace detail

/// The solution map F(u, lambda) = (u − A(reaction), integral-u). Zeros of
/// F − (0, nu) are exactly the discrete solutions of the constrained problem.
/// The resolvent is composed through the weak pairing (pointwise reaction
/// values integrated against test functions), which keeps the adjoint and
/// cokernel identities exact in the discrete model.
inline AugmentedField solution_map(const Geometry& geo, double eps, const Potential& pot,
                                   const Field& u, double lambda) {
  Field w = geo.solve_energy(eps, geo.pointwise_weak(detail::reaction_values(pot, u, lambda)));
  return {u - w, geo.integrate(u)};
}

/// State-direction derivative of the solution map:
///   dF[v, Lambda] = (v − A(dReaction[v, Lambda]), integral-v).
inline AugmentedField solution_map_derivative(const Geometry& geo, double eps,
                                              const Potential& pot, const Field& u,
                                              const Field& v, double Lambda) {
  Field w = geo.solve_energy(
      eps, geo.pointwise_weak(detail::reaction_derivative_values(pot, u, v, Lambda)));
  return {v - w, geo.integrate(v)};
}

/// Parameter-direction derivative of the solution map at fixed (u, lambda):
///   (−dA[eta,h](reaction), (1/2) integral(tr_g h · u dmu)).
inline AugmentedField solution_map_parameter_derivative(const Geometry& geo, double eps,
                                                        const Potential& pot, const Field& u,
                                                        double lambda, double eta,
                                                        const MetricDirection& dir) {
  Field da = resolvent_variation_weak(geo, eps, eta, dir,
                                      detail::reaction_values(pot, u, lambda));
  da *= -1.0;
  const auto trh = detail::trace_h_values(geo, dir);
  const auto uv = u.oversampled_values();
  const auto& rho = geo.quad_weight();
  double mass = 0.0;
  for (std::size_t q = 0; q < trh.size(); ++q) mass += trh[q] * uv[q].real() * rho[q];
  return {std::move(da), 0.5 * mass * geo.quad_norm()};
}

/// Constrained functional J(u, lambda) =
///   integral( eps^2/2 g(grad u, grad u) + W(u) ) dmu − lambda (integral-u − nu).
/// Stationarity in (u, lambda) is equivalent to solving the constrained
/// problem; the multiplier enters through the constraint only, so the scalar
/// gradient slot is nu − integral-u.
inline double lagrangian_value(const Geometry& geo, double eps, const Potential& pot,
                               const Field& u, double lambda, double nu) {
  double value = 0.5 * eps * eps * geo.dirichlet_form(u, u);
  const auto uv = u.oversampled_values();
  const auto& rho = geo.quad_weight();
  double wsum = 0.0;
  for (std::size_t q = 0; q < uv.size(); ++q) wsum += pot.W(uv[q].real()) * rho[q];
  value += wsum * geo.quad_norm();
  value -= lambda * (geo.integrate(u) - nu);
  return value;
}

/// Gradient of J in the product of (E_eps Riesz) x R: the field slot is the
/// E-representer of the u-derivative, which coincides with the field slot of
/// the solution map; the scalar slot is nu − integral-u.
inline AugmentedField lagrangian_gradient(const Geometry& geo, double eps, const Potential& pot,
                                          const Field& u, double lambda, double nu) {
  AugmentedField f = solution_map(geo, eps, pot, u, lambda);
  return {std::move(f.field), nu - f.scalar};
}

}  // namespace aclab
