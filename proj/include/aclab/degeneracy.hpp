// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "aclab/dense.hpp"
#include "aclab/operators.hpp"

namespace aclab {

inline constexpr double kDegenerateTol = 1e-8;   // relative to sigma_max
inline constexpr double kMarginalFactor = 10.0;  // marginal band upper edge

/// Linearized constrained problem at (u, lambda): maps (v, Lambda) to the
/// residual pair (-eps^2 Lap v + W''(u) v - Lambda, integral(v) dmu). The
/// field component is returned as the L2(mu) representative of the weak form.
inline AugmentedField linearized_apply(const Geometry& geo, double eps, const Potential& pot,
                                       const Field& u, const Field& v, double Lambda) {
  const auto uv = u.oversampled_values();
  auto vv = v.oversampled_values();
  for (std::size_t q = 0; q < vv.size(); ++q)
    vv[q] = cplx(pot.d2W(uv[q].real()) * vv[q].real() - Lambda, 0.0);
  Field data = geo.dirichlet_weak(v);
  data *= eps * eps;
  data += geo.pointwise_weak(std::move(vv));
  return {geo.solve_mass(data), geo.integrate(v)};
}

enum class DegeneracyClass { nondegenerate, marginal, degenerate };

inline const char* to_string(DegeneracyClass c) {
  switch (c) {
    case DegeneracyClass::nondegenerate: return "nondegenerate";
    case DegeneracyClass::marginal: return "marginal";
    case DegeneracyClass::degenerate: return "degenerate";
  }
  return "?";
}

inline DegeneracyClass classify_sigma(double sigma_min, double sigma_max,
                                      double tau = kDegenerateTol) {
  const double rel = sigma_min / sigma_max;
  if (rel < tau) return DegeneracyClass::degenerate;
  if (rel < kMarginalFactor * tau) return DegeneracyClass::marginal;
  return DegeneracyClass::nondegenerate;
}

struct PredictedDegeneracy {
  double eps = 0.0;
  double eigenvalue = 0.0;  // Laplace eigenvalue theta with eps^2 theta = -W''(c)
  int multiplicity = 0;
};

struct DegeneracyReport {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  std::vector<double> smallest;        // ascending tail of the singular spectrum
  int kernel_dimension = 0;            // singular values below tau * sigma_max
  DegeneracyClass classification = DegeneracyClass::nondegenerate;
  std::vector<AugmentedField> kernel;  // primed-orthonormal near-null basis
  std::optional<std::vector<PredictedDegeneracy>> predicted;  // constants only
};

/// Epsilons at which the constant branch with mass nu is degenerate:
/// eps_j = sqrt(-W''(nu/vol) / theta_j) over the first j_max distinct
/// positive Laplace eigenvalues; decreasing in j. Empty when W''(nu/vol) >= 0.
inline std::vector<PredictedDegeneracy> degenerate_epsilons(const ManifoldSpec& spec,
                                                            const Potential& pot, double nu,
                                                            int j_max) {
  const double vol = volume(spec);
  const double w2 = pot.d2W(nu / vol);
  if (w2 >= 0.0) return {};
  std::vector<PredictedDegeneracy> out;
  for (const SpectralLine& line : laplacian_spectrum(spec, j_max)) {
    PredictedDegeneracy p;
    p.eigenvalue = line.eigenvalue;
    p.multiplicity = line.multiplicity;
    p.eps = std::sqrt(-w2 / line.eigenvalue);
    out.push_back(p);
  }
  return out;
}

/// Smallest primed-inner-product singular values of the derivative of the
/// solution map at (u, lambda), with a near-kernel basis. For (numerically)
/// constant states the analytic criterion predictions are attached.
inline DegeneracyReport min_singular(const Geometry& geo, double eps, const Potential& pot,
                                     const Field& u, int max_vectors = 8,
                                     double tau = kDegenerateTol) {
  SpectralBasis basis(geo.grid());
  AssembledOperator op = assemble_augmented_jacobian(geo, eps, pot, u, basis);
  SingularAnalysis an = primed_singular_analysis(op, tau, max_vectors, false);

  DegeneracyReport rep;
  rep.sigma_min = an.sigma_min;
  rep.sigma_max = an.sigma_max;
  rep.smallest = an.smallest;
  rep.kernel_dimension = an.below;
  rep.classification = classify_sigma(an.sigma_min, an.sigma_max, tau);
  const int take = std::min({max_vectors, rep.kernel_dimension,
                             static_cast<int>(an.right_vectors.cols())});
  for (int j = 0; j < take; ++j)
    rep.kernel.push_back(basis.augmented_from_coords(an.right_vectors.col(j)));

  Field fluct = u;
  fluct.set_mean(0.0);
  if (fluct.coefficient_norm() <= 1e-12 * (1.0 + std::abs(u.mean()))) {
    const double nu = geo.integrate(u);
    rep.predicted = degenerate_epsilons(geo.spec(), pot, nu, 6);
  }
  return rep;
}

/// The constant state with mass nu: u = nu/vol, lambda = W'(nu/vol).
inline std::pair<Field, double> constant_solution(const Geometry& geo, const Potential& pot,
                                                  double nu) {
  const double c = nu / geo.volume();
  return {Field::constant(geo.grid(), c), pot.dW(c)};
}

/// Angle between `target` and the span of `basis` in the primed inner
/// product; pi/2 when the basis is empty. The angle is taken from the norm of
/// the explicit projection residual, which cancels elementwise and so resolves
/// near-zero angles far below the sqrt(machine epsilon) floor of the
/// cos^2-based formula.
inline double subspace_angle(const Geometry& geo, double eps,
                             const std::vector<AugmentedField>& basis,
                             const AugmentedField& target) {
  if (basis.empty()) return std::numbers::pi / 2.0;
  const int m = static_cast<int>(basis.size());
  Eigen::MatrixXd G(m, m);
  Eigen::VectorXd c(m);
  for (int i = 0; i < m; ++i) {
    c(i) = primed_inner(geo, eps, basis[i], target);
    for (int j = i; j < m; ++j) {
      G(i, j) = primed_inner(geo, eps, basis[i], basis[j]);
      G(j, i) = G(i, j);
    }
  }
  const Eigen::VectorXd x = G.ldlt().solve(c);
  AugmentedField r = target;
  for (int i = 0; i < m; ++i) {
    Field scaled = basis[static_cast<std::size_t>(i)].field;
    scaled *= x(i);
    r.field -= scaled;
    r.scalar -= x(i) * basis[static_cast<std::size_t>(i)].scalar;
  }
  const double t2 = primed_inner(geo, eps, target, target);
  const double r2 = primed_inner(geo, eps, r, r);
  const double s2 = std::clamp(r2 / t2, 0.0, 1.0);
  return std::asin(std::sqrt(s2));
}

struct CokernelReport {
  int left_dimension = 0;        // numerical left-kernel size
  int kernel_dimension = 0;      // right-kernel size from the same analysis
  bool dimensions_match = true;
  double max_residual = 0.0;     // worst linearized-problem residual after the sign flip
  bool consistent = true;        // every flipped pair solves the linearized problem
  std::vector<AugmentedField> left_kernel;
};

/// Tests the adjoint identity: (v, Lambda) annihilates the range of the
/// derivative iff (v, -Lambda) solves the linearized constrained problem.
/// Computes the numerical left-kernel in the primed inner product, flips the
/// sign of each Lambda, and measures the linearized residual.
inline CokernelReport cokernel_check(const Geometry& geo, double eps, const Potential& pot,
                                     const Field& u, double tol = 1e-8,
                                     double tau = kDegenerateTol) {
  SpectralBasis basis(geo.grid());
  AssembledOperator op = assemble_augmented_jacobian(geo, eps, pot, u, basis);
  SingularAnalysis an = primed_singular_analysis(op, tau, 8, true);

  CokernelReport rep;
  rep.kernel_dimension = an.below;
  rep.left_dimension = std::min<int>(an.below, static_cast<int>(an.left_vectors.cols()));
  rep.dimensions_match = rep.left_dimension == rep.kernel_dimension;
  for (int j = 0; j < rep.left_dimension; ++j) {
    AugmentedField w = basis.augmented_from_coords(an.left_vectors.col(j));
    AugmentedField r = linearized_apply(geo, eps, pot, u, w.field, -w.scalar);
    const double wn = std::sqrt(primed_inner(geo, eps, w, w));
    const double rn = std::sqrt(geo.mass_form(r.field, r.field) + r.scalar * r.scalar);
    rep.max_residual = std::max(rep.max_residual, rn / std::max(wn, 1e-300));
    rep.left_kernel.push_back(std::move(w));
  }
  rep.consistent = rep.max_residual <= tol;
  return rep;
}

/// Morse-theoretic lower bound P_M(1) on the number of critical points:
/// 2^d for the torus T^d, 2 for the round sphere.
inline int morse_lower_bound(const ManifoldSpec& m) {
  if (m.kind == ManifoldKind::sphere) return 2;
  return 1 << m.dim;
}

/// Kernel of the Hessian of J restricted to the constraint tangent space
/// {v : integral(v) dmu = 0}, via a dense generalized eigensolve. At a
/// critical point this kernel must match the field parts of the augmented
/// near-kernel from min_singular.
inline std::vector<Field> hessian_kernel(const Geometry& geo, double eps, const Potential& pot,
                                         const Field& u, double tau = kDegenerateTol) {
  SpectralBasis basis(geo.grid());
  const int nb = basis.field_dim();
  AssembledOperator op = assemble_augmented_jacobian(geo, eps, pot, u, basis);

  // Gram matrices in the trig basis. The Dirichlet Gram is diagonal for every
  // supported metric, so the mass Gram is E minus its eps^2-weighted diagonal.
  Eigen::VectorXd dir_diag = Eigen::VectorXd::Zero(nb);
  for (std::size_t h = 0; h < basis.half_modes().size(); ++h) {
    const double a = geo.sqrt_det_g() * geo.alpha(basis.half_modes()[h]);
    dir_diag(1 + 2 * static_cast<int>(h)) = a;
    dir_diag(2 + 2 * static_cast<int>(h)) = a;
  }
  Eigen::MatrixXd E;
  if (op.diagonal_gram) {
    E = Eigen::VectorXd(op.R_diag.head(nb).array().square()).asDiagonal();
  } else {
    E = op.R.transpose() * op.R;
  }
  Eigen::MatrixXd M = E;
  M.diagonal() -= (eps * eps) * dir_diag;

  // Hessian bilinear form: H = E * T_state = eps^2 D + <W''(u) b_i, b_j>_mu.
  Eigen::MatrixXd H = E * op.T.topLeftCorner(nb, nb);
  H = 0.5 * (H + H.transpose()).eval();

  // Householder basis of the constraint tangent {c : m^T c = 0}.
  const Eigen::VectorXd m = op.T.row(nb).head(nb).transpose();
  Eigen::VectorXd v = m.normalized();
  v(0) -= 1.0;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(nb, nb);
  if (v.squaredNorm() > 1e-28) Q -= (2.0 / v.squaredNorm()) * (v * v.transpose());
  const Eigen::MatrixXd Z = Q.rightCols(nb - 1);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Z.transpose() * H * Z, Z.transpose() * M * Z);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("constrained Hessian eigensolve failed");
  const Eigen::VectorXd theta = es.eigenvalues();
  const double scale = theta.cwiseAbs().maxCoeff();
  std::vector<Field> kernel;
  for (int i = 0; i < theta.size(); ++i)
    if (std::abs(theta(i)) <= tau * scale)
      kernel.push_back(basis.from_coords(Z * es.eigenvectors().col(i)));
  return kernel;
}

}  // namespace aclab
