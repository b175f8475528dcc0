// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "aclab/grid.hpp"

namespace aclab {

/// Real scalar field on a TorusGrid stored as Fourier coefficients over the
/// band |k_i| <= kmax. Storage is the full n^d complex array in standard DFT
/// layout; modes outside the band (Nyquist lines) are kept identically zero.
class Field {
 public:
  Field() = default;

  explicit Field(const TorusGrid& grid) : grid_(grid), coef_(grid.points(), cplx(0.0, 0.0)) {}

  static Field constant(const TorusGrid& grid, double value) {
    Field f(grid);
    f.coef_[0] = cplx(value, 0.0);
    return f;
  }

  /// Build from full-resolution coefficient array (band enforced by zeroing
  /// everything outside it and Hermitian-symmetrizing the rest).
  static Field from_coefficients(const TorusGrid& grid, std::vector<cplx> coef) {
    if (coef.size() != grid.points()) throw std::invalid_argument("coefficient array size mismatch");
    Field f(grid);
    f.coef_ = std::move(coef);
    f.enforce_band();
    f.enforce_real();
    return f;
  }

  /// Build from point values sampled on the native n^d grid.
  static Field from_values(const TorusGrid& grid, const std::vector<cplx>& values) {
    if (values.size() != grid.points()) throw std::invalid_argument("value array size mismatch");
    Field f(grid);
    detail::dft_coefficients(grid.dim, grid.n, values, f.coef_);
    f.enforce_band();
    f.enforce_real();
    return f;
  }

  const TorusGrid& grid() const { return grid_; }
  const std::vector<cplx>& coefficients() const { return coef_; }

  cplx coefficient(const std::array<int, 3>& k) const {
    if (!grid_.in_band(k)) return cplx(0.0, 0.0);
    return coef_[grid_.flat_index(k, grid_.n)];
  }

  void set_coefficient(const std::array<int, 3>& k, cplx value) {
    if (!grid_.in_band(k)) throw std::invalid_argument("mode outside spectral band");
    coef_[grid_.flat_index(k, grid_.n)] = value;
    std::array<int, 3> mk{-k[0], -k[1], -k[2]};
    coef_[grid_.flat_index(mk, grid_.n)] = std::conj(value);
  }

  double mean() const { return coef_[0].real(); }

  void set_mean(double value) { coef_[0] = cplx(value, 0.0); }

  /// Values on the native n^d grid.
  std::vector<cplx> values() const {
    std::vector<cplx> v;
    detail::dft_values(grid_.dim, grid_.n, coef_, v);
    return v;
  }

  /// Values on the oversampled (factor*n)^d grid (zero-padded spectrum).
  /// factor = 2 suffices to evaluate cubic products without aliasing.
  std::vector<cplx> oversampled_values(int factor = 2) const {
    const int m = factor * grid_.n;
    std::vector<cplx> padded(pow_size(m), cplx(0.0, 0.0));
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      padded[grid_.flat_index(k, m)] = coef_[grid_.flat_index(k, grid_.n)];
    });
    std::vector<cplx> v;
    detail::dft_values(grid_.dim, m, padded, v);
    return v;
  }

  /// Band-truncate point values given on the (factor*n)^d grid back to a
  /// Field. Together with oversampled_values this is the exact Galerkin
  /// projection of pointwise products.
  static Field from_oversampled_values(const TorusGrid& grid, const std::vector<cplx>& values,
                                       int factor = 2) {
    const int m = factor * grid.n;
    if (values.size() != pow_size_for(grid.dim, m))
      throw std::invalid_argument("oversampled value array size mismatch");
    std::vector<cplx> coef_m;
    detail::dft_coefficients(grid.dim, m, values, coef_m);
    Field f(grid);
    detail::for_each_band_mode(grid, [&](const std::array<int, 3>& k) {
      f.coef_[grid.flat_index(k, grid.n)] = coef_m[grid.flat_index(k, m)];
    });
    f.enforce_real();
    return f;
  }

  /// Translate by a coordinate shift s: u(x) -> u(x - s).
  Field translated(const std::array<double, 3>& s) const {
    Field g(grid_);
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      const std::size_t idx = grid_.flat_index(k, grid_.n);
      double phase = 0.0;
      for (int a = 0; a < grid_.dim; ++a) phase -= 2.0 * std::numbers::pi * k[a] * s[a];
      g.coef_[idx] = std::polar(1.0, phase) * coef_[idx];
    });
    g.enforce_real();
    return g;
  }

  /// Partial derivative along coordinate axis: multiply mode k by 2*pi*i*k_a.
  Field derivative(int axis) const {
    Field g(grid_);
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      const std::size_t idx = grid_.flat_index(k, grid_.n);
      g.coef_[idx] = cplx(0.0, 2.0 * std::numbers::pi * k[axis]) * coef_[idx];
    });
    return g;
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += o.coef_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] -= o.coef_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (auto& c : coef_) c *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  /// l2 norm of the coefficient vector (not a geometric norm; used for
  /// convergence bookkeeping only).
  double coefficient_norm() const {
    double s = 0.0;
    for (const auto& c : coef_) s += std::norm(c);
    return std::sqrt(s);
  }

  void enforce_band() {
    const int km = grid_.kmax();
    std::vector<int> dims(static_cast<std::size_t>(grid_.dim), grid_.n);
    for (std::size_t idx = 0; idx < coef_.size(); ++idx) {
      std::size_t rem = idx;
      bool keep = true;
      for (int a = grid_.dim - 1; a >= 0; --a) {
        const int i = static_cast<int>(rem % static_cast<std::size_t>(grid_.n));
        rem /= static_cast<std::size_t>(grid_.n);
        const int k = TorusGrid::freq_of(i, grid_.n);
        if (k < -km || k > km) keep = false;
      }
      if (!keep) coef_[idx] = cplx(0.0, 0.0);
    }
  }

  /// Project onto real fields: c_{-k} = conj(c_k).
  void enforce_real() {
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      std::array<int, 3> mk{-k[0], -k[1], -k[2]};
      const std::size_t i = grid_.flat_index(k, grid_.n);
      const std::size_t j = grid_.flat_index(mk, grid_.n);
      if (i < j) return;
      const cplx avg = 0.5 * (coef_[i] + std::conj(coef_[j]));
      coef_[i] = avg;
      coef_[j] = std::conj(avg);
    });
    coef_[0] = cplx(coef_[0].real(), 0.0);
  }

 private:
  std::size_t pow_size(int m) const { return pow_size_for(grid_.dim, m); }
  static std::size_t pow_size_for(int dim, int m) {
    std::size_t p = 1;
    for (int a = 0; a < dim; ++a) p *= static_cast<std::size_t>(m);
    return p;
  }
  void check_same(const Field& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("field grid mismatch");
  }

  TorusGrid grid_;
  std::vector<cplx> coef_;
};

/// Pointwise map applied on the de-aliased (2x oversampled) grid, truncated
/// back to the band. For polynomial maps of degree <= 3 this equals the exact
/// Galerkin projection of f(u).
template <typename F>
Field pointwise(const Field& u, F&& f, int factor = 2) {
  auto vals = u.oversampled_values(factor);
  for (auto& v : vals) v = cplx(f(v.real()), 0.0);
  return Field::from_oversampled_values(u.grid(), vals, factor);
}

/// Pointwise product of two fields via the same de-aliased route.
inline Field pointwise_product(const Field& u, const Field& v, int factor = 2) {
  auto a = u.oversampled_values(factor);
  auto b = v.oversampled_values(factor);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = cplx(a[i].real() * b[i].real(), 0.0);
  return Field::from_oversampled_values(u.grid(), a, factor);
}

}  // namespace aclab
