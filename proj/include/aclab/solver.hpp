// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "aclab/dense.hpp"
#include "aclab/operators.hpp"

namespace aclab {

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int max_backtracks = 20;       // residual backtracking, halving steps
  double singular_rcond = 1e-12; // LU rank-deficiency threshold
  int dense_limit = 2600;        // augmented dimension bound for the dense path
};

struct Solution {
  Field u;
  double lambda = 0.0;
  double eps = 0.0;
  double nu = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
  double contraction = std::numeric_limits<double>::quiet_NaN();
  bool contraction_ok = true;
};

/// Numerical rank deficiency met inside a Newton linear solve — the signature
/// of a degenerate point on the branch.
class SingularJacobian : public std::runtime_error {
 public:
  explicit SingularJacobian(double rcond)
      : std::runtime_error("Jacobian numerically singular (rcond " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Non-convergence (iteration cap or failed line search / step control).
class SolveFailure : public std::runtime_error {
 public:
  SolveFailure(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

namespace detail {

/// Residual of the constrained problem in the primed norm.
inline double residual_norm(const Geometry& geo, double eps, const AugmentedField& f,
                            double nu) {
  const double mass_err = f.scalar - nu;
  return std::sqrt(energy_inner(geo, eps, f.field, f.field) + mass_err * mass_err);
}

/// Restarted GMRES on the augmented state Jacobian, used above the dense
/// assembly limit. Unpreconditioned: the operator is identity plus a
/// low-rank-dominant compact part, so the spectrum clusters at 1.
template <typename Apply>
Eigen::VectorXd gmres(Apply&& apply, const Eigen::VectorXd& rhs, double rel_tol, int max_iter,
                      int restart = 200) {
  const int n = static_cast<int>(rhs.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double target = rel_tol * rhs.norm();
  for (int outer = 0; outer < std::max(1, max_iter / restart); ++outer) {
    Eigen::VectorXd r = rhs - apply(x);
    double beta = r.norm();
    if (beta <= target) return x;
    const int m = restart;
    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    std::vector<double> cs(m), sn(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    V.col(0) = r / beta;
    g(0) = beta;
    int k = 0;
    for (; k < m; ++k) {
      Eigen::VectorXd w = apply(V.col(k));
      for (int i = 0; i <= k; ++i) {
        H(i, k) = V.col(i).dot(w);
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      if (H(k + 1, k) > 0) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / denom;
      sn[k] = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn[k] * g(k);
      g(k) = cs[k] * g(k);
      if (std::abs(g(k + 1)) <= target) {
        ++k;
        break;
      }
    }
    Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    x += V.leftCols(k) * y;
    if ((rhs - apply(x)).norm() <= target) return x;
  }
  throw SolveFailure("inner linear solve (GMRES) failed to converge", {});
}

inline void fit_contraction(Solution& sol) {
  const auto& e = sol.residual_history;
  sol.contraction = std::numeric_limits<double>::quiet_NaN();
  sol.contraction_ok = true;
  if (sol.iterations < 3 || e.size() < 3) return;
  double c = 0.0;
  int pairs = 0;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    if (e[k] <= 1e-2 && e[k] > 0.0) {
      c = std::max(c, e[k + 1] / (e[k] * e[k]));
      ++pairs;
    }
  }
  if (pairs == 0) {
    sol.contraction_ok = false;  // never reached the quadratic regime
    return;
  }
  sol.contraction = c;
  const double last_ratio = e[e.size() - 1] / e[e.size() - 2];
  sol.contraction_ok = last_ratio <= 0.2;  // linear-rate stall flags near-degeneracy
}

}  // namespace detail

/// Newton iteration on the solution map, driving F(u, lambda) to (0, nu).
/// Dense augmented-Jacobian linear solves up to opts.dense_limit unknowns,
/// matrix-free GMRES above; residual backtracking with factor 1/2.
inline Solution newton_solve(const Geometry& geo, double eps, const Potential& pot, double nu,
                             const Field& init, double lambda0, const NewtonOptions& opts = {}) {
  SpectralBasis basis(geo.grid());
  Field u = init;
  double lambda = lambda0;
  AugmentedField f = solution_map(geo, eps, pot, u, lambda);
  double rn = detail::residual_norm(geo, eps, f, nu);
  std::vector<double> history{rn};

  int it = 0;
  for (; it < opts.max_iter && rn > opts.tol; ++it) {
    Eigen::VectorXd rhs(basis.dim());
    rhs.head(basis.field_dim()) = -basis.coords(f.field);
    rhs(basis.field_dim()) = -(f.scalar - nu);

    Eigen::VectorXd step;
    if (basis.dim() <= opts.dense_limit) {
      AssembledOperator op = assemble_augmented_jacobian(geo, eps, pot, u, basis);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.T);
      const Eigen::VectorXd d = lu.matrixLU().diagonal().cwiseAbs();
      const double rcond = d.minCoeff() / d.maxCoeff();
      if (rcond < opts.singular_rcond) throw SingularJacobian(rcond);
      step = lu.solve(rhs);
    } else {
      auto apply = [&](const Eigen::VectorXd& z) {
        AugmentedField dz = solution_map_derivative(
            geo, eps, pot, u, basis.from_coords(z.head(basis.field_dim())),
            z(basis.field_dim()));
        return basis.augmented_coords(dz);
      };
      step = detail::gmres(apply, rhs, 1e-12, 600);
    }

    const Field du = basis.from_coords(step.head(basis.field_dim()));
    const double dl = step(basis.field_dim());
    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      Field u_try = u + s * du;
      const double l_try = lambda + s * dl;
      AugmentedField f_try = solution_map(geo, eps, pot, u_try, l_try);
      const double rn_try = detail::residual_norm(geo, eps, f_try, nu);
      if (rn_try <= (1.0 - 1e-4 * s) * rn) {
        u = std::move(u_try);
        lambda = l_try;
        f = std::move(f_try);
        rn = rn_try;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) throw SolveFailure("Newton line search stalled", history);
    history.push_back(rn);
  }
  if (rn > opts.tol) throw SolveFailure("Newton iteration cap reached", history);

  Solution sol{std::move(u), lambda, eps, nu, rn, it, std::move(history)};
  detail::fit_contraction(sol);
  return sol;
}

/// Mass-conserving descent used to initialize Newton: semi-implicit steps
///   (dt eps^2 Dir + (1+dt) Mass) u_next = <u + dt (u - W'(u) + mean-multiplier), .>
/// followed by resetting the mean so the constraint holds exactly. The
/// constrained energy integral(eps^2/2 |grad u|^2 + W(u)) dmu must not
/// increase; offending steps are retried with dt halved (at most 30 times).
inline Field gradient_flow(const Geometry& geo, double eps, const Potential& pot, double nu,
                           Field init, int steps, double dt) {
  auto energy = [&](const Field& u) {
    double e = 0.5 * eps * eps * geo.dirichlet_form(u, u);
    const auto uv = u.oversampled_values();
    const auto& rho = geo.quad_weight();
    double w = 0.0;
    for (std::size_t q = 0; q < uv.size(); ++q) w += pot.W(uv[q].real()) * rho[q];
    return e + w * geo.quad_norm();
  };

  Field u = std::move(init);
  u += Field::constant(geo.grid(), (nu - geo.integrate(u)) / geo.volume());
  double J = energy(u);

  for (int step = 0; step < steps; ++step) {
    for (int halvings = 0;; ++halvings) {
      if (halvings > 30) throw SolveFailure("flow step rejected after 30 halvings", {});
      const auto uv = u.oversampled_values();
      const auto& rho = geo.quad_weight();
      double wbar = 0.0;
      for (std::size_t q = 0; q < uv.size(); ++q) wbar += pot.dW(uv[q].real()) * rho[q];
      wbar *= geo.quad_norm() / geo.volume();
      std::vector<cplx> rhs(uv.size());
      for (std::size_t q = 0; q < uv.size(); ++q) {
        const double t = uv[q].real();
        rhs[q] = cplx(t + dt * (t - pot.dW(t) + wbar), 0.0);
      }
      const double eps_im = std::sqrt(dt / (1.0 + dt)) * eps;
      Field w = geo.solve_energy(eps_im, geo.pointwise_weak(std::move(rhs)));
      w *= 1.0 / (1.0 + dt);
      w += Field::constant(geo.grid(), (nu - geo.integrate(w)) / geo.volume());
      const double Jn = energy(w);
      if (Jn <= J + 1e-13 * (1.0 + std::abs(J))) {
        u = std::move(w);
        J = Jn;
        break;
      }
      dt *= 0.5;
    }
  }
  return u;
}

/// Smallest/largest primed singular values of the augmented Jacobian at a
/// state — the cheap degeneracy monitor used along continuation branches.
inline std::pair<double, double> singular_extremes(const Geometry& geo, double eps,
                                                   const Potential& pot, const Field& u) {
  SpectralBasis basis(geo.grid());
  AssembledOperator op = assemble_augmented_jacobian(geo, eps, pot, u, basis);
  SingularAnalysis an = primed_singular_analysis(op, 0.0, 0, false);
  return {an.sigma_min, an.sigma_max};
}

struct DegenerateBracket {
  double lo = 0.0;
  double hi = 0.0;
  double eps_refined = 0.0;   // argmin of the singular-value dip
  double sigma_refined = 0.0;
};

struct ContinuationResult {
  std::vector<Solution> solutions;
  std::vector<DegenerateBracket> brackets;
  std::vector<std::string> diagnostics;
};

namespace detail {

template <typename SolveAt>
DegenerateBracket golden_refine(double a, double b, SolveAt&& sigma_at) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = sigma_at(x1), f2 = sigma_at(x2);
  while (b - a > 1e-6) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = sigma_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = sigma_at(x2);
    }
  }
  const double mid = 0.5 * (a + b);
  return {a, b, mid, sigma_at(mid)};
}

}  // namespace detail

/// Predictor–corrector continuation in eps. Degenerate points are detected
/// two ways: a SingularJacobian from the corrector triggers step bisection to
/// 1e-6 spacing, and (the generic mechanism on branches whose predictor stays
/// exact, e.g. constants) a local dip in the smallest primed singular value
/// across accepted targets triggers golden-section refinement of the dip.
inline ContinuationResult continuation(const Geometry& geo, const Potential& pot, double nu,
                                       const Solution& start,
                                       const std::vector<double>& eps_targets,
                                       const NewtonOptions& opts = {},
                                       bool detect_degenerate = true) {
  ContinuationResult out;
  Field u = start.u;
  double lambda = start.lambda;
  double eps_prev = start.eps;
  std::vector<double> eps_acc, sigma_acc, sigmax_acc;

  auto sigma_of = [&](double e, const Field& from_u, double from_l) {
    Solution s = newton_solve(geo, e, pot, nu, from_u, from_l, opts);
    return singular_extremes(geo, e, pot, s.u).first;
  };

  // Corrector with sub-stepping: a failed solve at `target` retries through
  // midpoints between the last converged eps and the target (up to depth 10).
  auto advance = [&](double target) {
    std::vector<double> pending{target};
    int depth = 0;
    Solution sol = start;  // placeholder; always overwritten before use
    while (!pending.empty()) {
      const double e = pending.back();
      try {
        sol = newton_solve(geo, e, pot, nu, u, lambda, opts);
        u = sol.u;
        lambda = sol.lambda;
        eps_prev = e;
        pending.pop_back();
      } catch (const SolveFailure&) {
        if (++depth > 10) throw;
        pending.push_back(0.5 * (eps_prev + e));
      }
    }
    return sol;
  };

  for (double target : eps_targets) {
    bool solved = false;
    try {
      Solution sol = advance(target);
      solved = true;
      if (detect_degenerate) {
        eps_acc.push_back(target);
        const auto [smin, smax] = singular_extremes(geo, target, pot, sol.u);
        sigma_acc.push_back(smin);
        sigmax_acc.push_back(smax);
        const std::size_t n = sigma_acc.size();
        if (n >= 3) {
          // A genuine degenerate point shows as a local minimum flanked by
          // clearly nondegenerate neighbors; golden-section refinement must
          // then drive sigma_min far below the flank level (a V, not a bowl).
          const double s0 = sigma_acc[n - 3], s1 = sigma_acc[n - 2], s2 = sigma_acc[n - 1];
          const double flank = std::min(s0, s2);
          if (s1 < s0 && s1 <= s2 && flank > 1e-6 * sigmax_acc[n - 2]) {
            double a = eps_acc[n - 3], b = eps_acc[n - 1];
            if (a > b) std::swap(a, b);
            const Field from_u = u;
            const double from_l = lambda;
            DegenerateBracket br = detail::golden_refine(
                a, b, [&](double e) { return sigma_of(e, from_u, from_l); });
            if (br.sigma_refined <= 1e-3 * flank) out.brackets.push_back(br);
          }
        }
      }
      out.solutions.push_back(std::move(sol));
    } catch (const SingularJacobian&) {
      // Bisect the step until the degenerate point is localized to 1e-6.
      double lo = eps_prev, hi = target;
      while (std::abs(hi - lo) > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        try {
          Solution sm = newton_solve(geo, mid, pot, nu, u, lambda, opts);
          u = sm.u;
          lambda = sm.lambda;
          lo = mid;
        } catch (const SingularJacobian&) {
          hi = mid;
        }
      }
      DegenerateBracket br;
      br.lo = std::min(lo, hi);
      br.hi = std::max(lo, hi);
      br.eps_refined = 0.5 * (lo + hi);
      br.sigma_refined = 0.0;
      out.brackets.push_back(br);
      try {
        Solution sol = newton_solve(geo, target, pot, nu, u, lambda, opts);
        u = sol.u;
        lambda = sol.lambda;
        out.solutions.push_back(std::move(sol));
        solved = true;
      } catch (const std::exception& e) {
        out.diagnostics.push_back("branch lost at eps = " + std::to_string(target) + ": " +
                                  e.what());
        return out;
      }
    } catch (const SolveFailure& e) {
      out.diagnostics.push_back("corrector failed at eps = " + std::to_string(target) + ": " +
                                e.what());
      return out;
    }
    if (solved) eps_prev = target;
  }
  return out;
}

}  // namespace aclab
