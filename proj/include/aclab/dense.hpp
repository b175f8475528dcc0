// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <vector>

#include "aclab/operators.hpp"

namespace aclab {

/// Real trigonometric basis of the band space with a deterministic ordering:
/// index 0 is the constant 1; each positive half-lattice mode k (lexicographic)
/// contributes sqrt(2) cos(2 pi k.x) then sqrt(2) sin(2 pi k.x). The basis is
/// orthonormal in L2(dx), so coordinate vectors double as coefficient data.
class SpectralBasis {
 public:
  explicit SpectralBasis(const TorusGrid& grid) : grid_(grid) {
    detail::for_each_band_mode(grid, [&](const std::array<int, 3>& k) {
      if (k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)))) half_.push_back(k);
    });
    std::sort(half_.begin(), half_.end());
  }

  const TorusGrid& grid() const { return grid_; }
  int field_dim() const { return 1 + 2 * static_cast<int>(half_.size()); }
  int dim() const { return field_dim() + 1; }  // + multiplier slot
  const std::vector<std::array<int, 3>>& half_modes() const { return half_; }

  /// Coordinates of a band field — or of weak data, since pairing against the
  /// basis extracts exactly the same linear functionals.
  Eigen::VectorXd coords(const Field& f) const {
    const double rt2 = std::numbers::sqrt2;
    Eigen::VectorXd c(field_dim());
    const auto& a = f.coefficients();
    c(0) = a[0].real();
    for (std::size_t m = 0; m < half_.size(); ++m) {
      const cplx v = a[grid_.flat_index(half_[m], grid_.n)];
      c(1 + 2 * static_cast<int>(m)) = rt2 * v.real();
      c(2 + 2 * static_cast<int>(m)) = -rt2 * v.imag();
    }
    return c;
  }

  Field from_coords(const Eigen::VectorXd& c) const {
    const double inv_rt2 = 1.0 / std::numbers::sqrt2;
    std::vector<cplx> coef(grid_.points(), cplx(0.0, 0.0));
    coef[0] = cplx(c(0), 0.0);
    for (std::size_t m = 0; m < half_.size(); ++m) {
      const cplx v(inv_rt2 * c(1 + 2 * static_cast<int>(m)),
                   -inv_rt2 * c(2 + 2 * static_cast<int>(m)));
      const std::array<int, 3>& k = half_[m];
      coef[grid_.flat_index(k, grid_.n)] = v;
      coef[grid_.flat_index({-k[0], -k[1], -k[2]}, grid_.n)] = std::conj(v);
    }
    return Field::from_coefficients(grid_, std::move(coef));
  }

  Eigen::VectorXd augmented_coords(const AugmentedField& a) const {
    Eigen::VectorXd c(dim());
    c.head(field_dim()) = coords(a.field);
    c(field_dim()) = a.scalar;
    return c;
  }

  AugmentedField augmented_from_coords(const Eigen::VectorXd& c) const {
    return {from_coords(c.head(field_dim())), c(field_dim())};
  }

 private:
  TorusGrid grid_;
  std::vector<std::array<int, 3>> half_;
};

/// Dense coordinate form of the augmented state Jacobian of the solution map,
/// together with the Cholesky factor of the primed Gram matrix. For phi = 0
/// the Gram is diagonal in the trig basis.
struct AssembledOperator {
  Eigen::MatrixXd T;          // (nb+1)^2 augmented Jacobian
  bool diagonal_gram = true;
  Eigen::VectorXd R_diag;     // sqrt of Gram diagonal (diagonal case)
  Eigen::MatrixXd R;          // upper Cholesky of the field Gram (dense case)

  /// Similarity transform into primed-orthonormal coordinates: R T R^{-1}.
  Eigen::MatrixXd primed_matrix() const {
    const int n = static_cast<int>(T.rows());
    if (diagonal_gram) {
      Eigen::MatrixXd S = T;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) S(i, j) *= R_diag(i) / R_diag(j);
      return S;
    }
    const int nb = n - 1;
    Eigen::MatrixXd Ra = Eigen::MatrixXd::Zero(n, n);
    Ra.topLeftCorner(nb, nb) = R;
    Ra(nb, nb) = 1.0;
    Eigen::MatrixXd X = Ra * T;
    // right-multiply by Ra^{-1}: solve X = S Ra for S
    Eigen::MatrixXd St = Ra.transpose().triangularView<Eigen::Lower>().solve(X.transpose());
    return St.transpose();
  }

  /// Map primed-orthonormal coordinates back to basis coordinates.
  Eigen::MatrixXd unprime(const Eigen::MatrixXd& Y) const {
    const int n = static_cast<int>(T.rows());
    if (diagonal_gram) {
      Eigen::MatrixXd Z = Y;
      for (int i = 0; i < n; ++i) Z.row(i) /= R_diag(i);
      return Z;
    }
    const int nb = n - 1;
    Eigen::MatrixXd Ra = Eigen::MatrixXd::Zero(n, n);
    Ra.topLeftCorner(nb, nb) = R;
    Ra(nb, nb) = 1.0;
    return Ra.triangularView<Eigen::Upper>().solve(Y);
  }
};

/// Assemble the augmented Jacobian of the solution map at (u, lambda) in the
/// trig basis:  T = [[I - E^{-1} K, -E^{-1} m], [m^T, 0]]  where
/// K_ij = integral((1 - W''(u)) b_j b_i dmu), m_j = integral(b_j dmu) and E is
/// the energy Gram matrix. The multiplier column and the mass row share m
/// because the reaction derivative in Lambda is the constant 1.
inline AssembledOperator assemble_augmented_jacobian(const Geometry& geo, double eps,
                                                     const Potential& pot, const Field& u,
                                                     const SpectralBasis& basis) {
  const int nb = basis.field_dim();
  const auto uv = u.oversampled_values();
  std::vector<double> w2(uv.size());
  for (std::size_t q = 0; q < uv.size(); ++q) w2[q] = 1.0 - pot.d2W(uv[q].real());

  AssembledOperator op;
  op.T.resize(nb + 1, nb + 1);

  Eigen::VectorXd m = basis.coords(geo.pointwise_weak(std::vector<cplx>(uv.size(), cplx(1.0, 0.0))));

  Eigen::MatrixXd K(nb, nb);
  Eigen::MatrixXd M;  // mass Gram, needed only for the dense-Gram path
  const bool diag = !geo.conformal();
  if (!diag) M.resize(nb, nb);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(nb);
  for (int j = 0; j < nb; ++j) {
    unit(j) = 1.0;
    const auto bv = basis.from_coords(unit).oversampled_values();
    unit(j) = 0.0;
    std::vector<cplx> kv(bv.size());
    for (std::size_t q = 0; q < bv.size(); ++q) kv[q] = cplx(w2[q] * bv[q].real(), 0.0);
    K.col(j) = basis.coords(geo.pointwise_weak(std::move(kv)));
    if (!diag) M.col(j) = basis.coords(geo.pointwise_weak(bv));
  }

  // Energy Gram: Dirichlet part is diagonal in the trig basis for all
  // supported metrics; the mass part is diagonal exactly when phi = 0.
  Eigen::VectorXd dir_diag = Eigen::VectorXd::Zero(nb);
  for (std::size_t h = 0; h < basis.half_modes().size(); ++h) {
    const double a = geo.sqrt_det_g() * geo.alpha(basis.half_modes()[h]);
    dir_diag(1 + 2 * static_cast<int>(h)) = a;
    dir_diag(2 + 2 * static_cast<int>(h)) = a;
  }

  op.diagonal_gram = diag;
  if (diag) {
    Eigen::VectorXd e_diag = (eps * eps) * dir_diag;
    e_diag.array() += geo.sqrt_det_g();
    op.R_diag.resize(nb + 1);
    op.R_diag.head(nb) = e_diag.cwiseSqrt();
    op.R_diag(nb) = 1.0;
    const Eigen::VectorXd inv_e = e_diag.cwiseInverse();
    op.T.topLeftCorner(nb, nb) =
        Eigen::MatrixXd::Identity(nb, nb) - inv_e.asDiagonal() * K;
    op.T.col(nb).head(nb) = -(inv_e.asDiagonal() * m);
  } else {
    Eigen::MatrixXd E = 0.5 * (M + M.transpose());
    E.diagonal() += (eps * eps) * dir_diag;
    Eigen::LLT<Eigen::MatrixXd> llt(E);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("energy Gram factorization failed");
    op.R = llt.matrixU();
    op.T.topLeftCorner(nb, nb) =
        Eigen::MatrixXd::Identity(nb, nb) - llt.solve(K);
    op.T.col(nb).head(nb) = -llt.solve(m);
  }
  op.T.row(nb).head(nb) = m.transpose();
  op.T(nb, nb) = 0.0;
  return op;
}

/// Singular-value analysis of the assembled operator with respect to the
/// primed inner product on both sides.
struct SingularAnalysis {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  std::vector<double> smallest;     // ascending, at most 8 entries
  Eigen::MatrixXd right_vectors;    // basis coords, primed-orthonormal columns
  Eigen::MatrixXd left_vectors;     // basis coords of left near-kernel
  int below = 0;                    // count of sigma < tau_rel * sigma_max
};

namespace detail {

inline void ritz_smallest(const Eigen::MatrixXd& Tt, int block, Eigen::MatrixXd& Z,
                          Eigen::VectorXd& sigma, bool left) {
  const int n = static_cast<int>(Tt.rows());
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Tt);
  Eigen::PartialPivLU<Eigen::MatrixXd> lut(Tt.transpose());
  std::mt19937_64 rng(0x414c4142u);
  Z.resize(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i)
      Z(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(block);
  for (int iter = 0; iter < 200; ++iter) {
    // inverse power step on T^T T (right vectors) or T T^T (left vectors)
    Eigen::MatrixXd W(n, block);
    for (int j = 0; j < block; ++j) {
      if (left)
        W.col(j) = lut.solve(lu.solve(Z.col(j)));
      else
        W.col(j) = lu.solve(lut.solve(Z.col(j)));
    }
    if (!W.allFinite()) throw std::runtime_error("singular-value iteration produced non-finite data");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    Z = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    Eigen::MatrixXd TZ = left ? Eigen::MatrixXd(Tt.transpose() * Z) : Eigen::MatrixXd(Tt * Z);
    Eigen::MatrixXd C = TZ.transpose() * TZ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    Z = (Z * es.eigenvectors()).eval();
    sigma = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    if (iter > 2 && (sigma - prev).cwiseAbs().maxCoeff() <= 1e-13 * (sigma.maxCoeff() + 1e-300))
      return;
    prev = sigma;
  }
}

}  // namespace detail

/// tau_rel: relative degeneracy threshold; max_vectors: cap on reported kernel
/// columns; dense_threshold: dimension at which the full SVD gives way to
/// LU-based inverse subspace iteration.
inline SingularAnalysis primed_singular_analysis(const AssembledOperator& op, double tau_rel,
                                                 int max_vectors, bool want_left,
                                                 int dense_threshold = 600) {
  SingularAnalysis out;
  const Eigen::MatrixXd Tt = op.primed_matrix();
  const int n = static_cast<int>(Tt.rows());
  if (n <= dense_threshold) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Tt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    out.sigma_max = s(0);
    out.sigma_min = s(n - 1);
    for (int i = std::max(0, n - 8); i < n; ++i) out.smallest.push_back(s(i));
    std::sort(out.smallest.begin(), out.smallest.end());
    const double cut = tau_rel * out.sigma_max;
    int below = 0;
    while (below < n && s(n - 1 - below) < cut) ++below;
    out.below = below;
    const int k = std::min(below, max_vectors);
    Eigen::MatrixXd V(n, k), U(n, k);
    for (int i = 0; i < k; ++i) {
      V.col(i) = svd.matrixV().col(n - 1 - i);
      U.col(i) = svd.matrixU().col(n - 1 - i);
    }
    out.right_vectors = op.unprime(V);
    if (want_left) out.left_vectors = op.unprime(U);
    return out;
  }

  // Large path: sigma_max by power iteration, smallest block by LU-based
  // inverse subspace iteration on the normal operator.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n).normalized();
  for (int it = 0; it < 60; ++it) w = (Tt.transpose() * (Tt * w)).normalized();
  out.sigma_max = std::sqrt((Tt * w).squaredNorm());

  const int block = std::min(n, std::max(8, max_vectors + 4));
  Eigen::MatrixXd Z;
  Eigen::VectorXd sigma;
  detail::ritz_smallest(Tt, block, Z, sigma, /*left=*/false);
  for (int i = 0; i < std::min(8, block); ++i) out.smallest.push_back(sigma(i));
  out.sigma_min = sigma(0);
  const double cut = tau_rel * out.sigma_max;
  int below = 0;
  while (below < block && sigma(below) < cut) ++below;
  out.below = below;
  out.right_vectors = op.unprime(Z.leftCols(std::min(below, max_vectors)));
  if (want_left) {
    Eigen::MatrixXd ZL;
    Eigen::VectorXd sigL;
    detail::ritz_smallest(Tt, block, ZL, sigL, /*left=*/true);
    int kl = 0;
    while (kl < block && sigL(kl) < cut) ++kl;
    out.left_vectors = op.unprime(ZL.leftCols(std::min(kl, max_vectors)));
  }
  return out;
}

}  // namespace aclab
