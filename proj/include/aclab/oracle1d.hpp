// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "aclab/potential.hpp"

namespace aclab {

/// No nonconstant periodic profile exists at the requested parameters.
class NotFound : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Profile1D {
  std::vector<double> values;  // at nodes j*period/mesh, j = 0..mesh-1
  double lambda = 0.0;
  double period = 0.0;
  double residual = 0.0;
  int newton_iterations = 0;
};

namespace detail {

/// Trigonometric collocation second-derivative matrix on a uniform periodic
/// mesh of [0, period), even mesh size.
inline Eigen::MatrixXd trig_second_derivative(int mesh, double period) {
  const double h = 2.0 * std::numbers::pi / mesh;
  Eigen::MatrixXd D2(mesh, mesh);
  for (int j = 0; j < mesh; ++j) {
    for (int l = 0; l < mesh; ++l) {
      const int d = j - l;
      if (d == 0) {
        D2(j, l) = -std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0;
      } else {
        const double s = std::sin(0.5 * d * h);
        D2(j, l) = -((d % 2 == 0) ? 1.0 : -1.0) / (2.0 * s * s);
      }
    }
  }
  const double scale = 2.0 * std::numbers::pi / period;
  return (scale * scale) * D2;
}

/// One constrained Newton solve of the collocation system; returns the final
/// residual max-norm through `residual`.
///
/// The continuous problem is translation invariant, so the bordered Jacobian
/// on the full mesh is singular along u' and a full-space solve emits junk
/// steps once the residual reaches the rounding floor. Profiles continued
/// from cosine seeds are even about x = 0, so the phase is pinned by solving
/// in the even subspace u_j = u_{m-j} (unknowns j = 0..m/2), where the
/// reduced Jacobian is nonsingular. The Laplacian is evaluated through the
/// folded operator on that subspace: summing row j and its mirror row in the
/// same order keeps the residual exactly reflection symmetric in floating
/// point, which a generic matrix-vector product does not (its reversed-order
/// sums of strongly cancelling terms differ at the 1e-10 level on fine
/// meshes). The residual floor still grows with mesh^2 and can sit above
/// `tol`, so a vanishing Newton step also counts as converged.
inline bool newton_1d(const Eigen::MatrixXd& D2, const Potential& pot, double eps, double nu,
                      double period, Eigen::VectorXd& u, double& lambda, double& residual,
                      int& iterations, double tol = 1e-12, int max_iter = 60) {
  const int m = static_cast<int>(u.size());
  const int h = m / 2;
  const double w = period / m;  // quadrature weight of the uniform mesh
  Eigen::VectorXd uh(h + 1);
  for (int j = 0; j <= h; ++j) uh(j) = (j == 0 || j == h) ? u(j) : 0.5 * (u(j) + u(m - j));
  Eigen::MatrixXd D2f(h + 1, h + 1);
  for (int j = 0; j <= h; ++j) {
    D2f(j, 0) = D2(j, 0);
    D2f(j, h) = D2(j, h);
    for (int k = 1; k < h; ++k) D2f(j, k) = D2(j, k) + D2(j, m - k);
  }
  Eigen::MatrixXd J(h + 2, h + 2);
  Eigen::VectorXd r(h + 2);
  bool converged = false;
  bool step_converged = false;
  for (int it = 0; it < max_iter && !converged; ++it) {
    Eigen::VectorXd lap = D2f * uh;
    for (int j = 0; j <= h; ++j) r(j) = -eps * eps * lap(j) + pot.dW(uh(j)) - lambda;
    double mass = uh(0) + uh(h);
    for (int j = 1; j < h; ++j) mass += 2.0 * uh(j);
    r(h + 1) = w * mass - nu;
    residual = r.cwiseAbs().maxCoeff();
    iterations = it;
    if (residual <= tol || step_converged) {
      converged = true;
      break;
    }
    J.topLeftCorner(h + 1, h + 1) = -(eps * eps) * D2f;
    for (int j = 0; j <= h; ++j) J(j, j) += pot.d2W(uh(j));
    J.col(h + 1).head(h + 1).setConstant(-1.0);
    J.row(h + 1).head(h + 1).setConstant(2.0 * w);
    J(h + 1, 0) = w;
    J(h + 1, h) = w;
    J(h + 1, h + 1) = 0.0;
    Eigen::VectorXd step = J.partialPivLu().solve(-r);
    if (!step.allFinite()) break;
    uh += step.head(h + 1);
    lambda += step(h + 1);
    step_converged =
        step.head(h + 1).cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + uh.cwiseAbs().maxCoeff()) &&
        std::abs(step(h + 1)) <= 1e-13 * (1.0 + std::abs(lambda));
  }
  for (int j = 0; j <= h; ++j) u(j) = uh(j);
  for (int j = 1; j < h; ++j) u(m - j) = uh(j);
  return converged;
}

}  // namespace detail

/// First bifurcation point of the constant branch on a circle of the given
/// circumference: eps_1^2 = -W''(nu/period) / (2 pi / period)^2. NaN when
/// W''(nu/period) >= 0 (no bifurcation at any eps).
inline double first_bifurcation_eps(const Potential& pot, double nu, double period) {
  const double w2 = pot.d2W(nu / period);
  if (w2 >= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double k1 = 2.0 * std::numbers::pi / period;
  return std::sqrt(-w2) / k1;
}

/// Nonconstant periodic solution of -eps^2 u'' + W'(u) = lambda with mean
/// constraint, by trigonometric collocation + Newton, continued down from
/// just below the first bifurcation point. Throws NotFound when no
/// nonconstant branch exists at this eps.
inline Profile1D solve_periodic(const Potential& pot, double eps, double nu, double period,
                                int mesh) {
  if (mesh < 256) throw std::invalid_argument("oracle mesh must be at least 256");
  if (mesh % 2 != 0) throw std::invalid_argument("oracle mesh must be even");
  const double eps1 = first_bifurcation_eps(pot, nu, period);
  if (!(eps < eps1)) throw NotFound("no nonconstant 1D branch at this eps (at/above bifurcation)");

  const Eigen::MatrixXd D2 = detail::trig_second_derivative(mesh, period);
  const double mean = nu / period;

  // Continuation ladder from near the bifurcation point down to the target.
  std::vector<double> ladder;
  for (double e = 0.98 * eps1; e > eps; e *= 0.93) ladder.push_back(e);
  ladder.push_back(eps);

  // Seed amplitudes tried in order; a pitchfork basin puts Newton back on the
  // constant branch when the seed is too small, so retry larger before giving up.
  bool newton_failed = false;
  for (double a0 : {0.4, 0.8, 0.2, 1.6}) {
    Eigen::VectorXd u(mesh);
    for (int j = 0; j < mesh; ++j)
      u(j) = mean + a0 * std::cos(2.0 * std::numbers::pi * j / mesh);
    double lambda = pot.dW(mean);

    Profile1D out;
    out.period = period;
    bool collapsed = false;
    bool failed = false;
    for (double e : ladder) {
      if (!detail::newton_1d(D2, pot, e, nu, period, u, lambda, out.residual,
                             out.newton_iterations)) {
        failed = true;
        break;
      }
      if ((u.array() - u.mean()).abs().maxCoeff() <= 1e-8) {
        collapsed = true;
        break;
      }
    }
    if (failed) {
      newton_failed = true;
      continue;
    }
    if (collapsed) continue;
    out.lambda = lambda;
    out.values.assign(u.data(), u.data() + mesh);
    return out;
  }
  if (newton_failed) throw std::runtime_error("1D collocation Newton failed for every seed");
  throw NotFound("1D branch collapsed to the constant for every seed");
}

/// Band-limited Fourier coefficients of a 1D profile: returns c_k for
/// k = 0..kmax with u(x) ~ c_0 + 2 sum_k Re(c_k e^{2 pi i k x / period}).
inline std::vector<std::complex<double>> profile_coefficients(const Profile1D& p, int kmax) {
  const int m = static_cast<int>(p.values.size());
  std::vector<std::complex<double>> c(kmax + 1);
  for (int k = 0; k <= kmax; ++k) {
    std::complex<double> s(0.0, 0.0);
    for (int j = 0; j < m; ++j) {
      const double ang = -2.0 * std::numbers::pi * k * j / m;
      s += p.values[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    c[k] = s / static_cast<double>(m);
  }
  return c;
}

}  // namespace aclab
