// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aclab/field.hpp"
#include "aclab/grid.hpp"

namespace aclab {

/// One cosine mode of the conformal exponent: amplitude * cos(2*pi k.x).
struct ConformalMode {
  std::array<int, 3> wavevector{0, 0, 0};
  double amplitude = 0.0;
};

/// Metric data. Torus: metric is exp(2*phi) * G with G constant SPD and phi a
/// band-limited conformal exponent (2D only). Sphere: round metric, radius R.
struct MetricSpec {
  Eigen::MatrixXd G;
  std::vector<ConformalMode> phi;
  double radius = 1.0;
};

enum class ManifoldKind { torus, sphere };

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::torus;
  int dim = 2;         // torus dimension, 2 or 3
  int resolution = 16; // torus grid points per axis (power of two)
  int max_degree = 8;  // sphere: spherical-harmonic degree cap
  MetricSpec metric;

  static ManifoldSpec flat_torus(int dim, int resolution) {
    ManifoldSpec m;
    m.kind = ManifoldKind::torus;
    m.dim = dim;
    m.resolution = resolution;
    m.metric.G = Eigen::MatrixXd::Identity(dim, dim);
    m.validate();
    return m;
  }

  static ManifoldSpec torus(int dim, int resolution, Eigen::MatrixXd G,
                            std::vector<ConformalMode> phi = {}) {
    ManifoldSpec m;
    m.kind = ManifoldKind::torus;
    m.dim = dim;
    m.resolution = resolution;
    m.metric.G = std::move(G);
    m.metric.phi = std::move(phi);
    m.validate();
    return m;
  }

  static ManifoldSpec sphere(double radius, int max_degree) {
    ManifoldSpec m;
    m.kind = ManifoldKind::sphere;
    m.dim = 2;
    m.max_degree = max_degree;
    m.metric.radius = radius;
    m.validate();
    return m;
  }

  bool conformal() const {
    for (const auto& mode : metric.phi)
      if (mode.amplitude != 0.0) return true;
    return false;
  }

  TorusGrid grid() const { return TorusGrid{dim, resolution}; }

  void validate() const {
    if (kind == ManifoldKind::sphere) {
      if (!(metric.radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
      if (max_degree < 1) throw std::invalid_argument("sphere degree cap must be >= 1");
      if (!metric.phi.empty()) throw std::invalid_argument("sphere metrics carry no conformal factor");
      return;
    }
    if (dim != 2 && dim != 3) throw std::invalid_argument("torus dimension must be 2 or 3");
    const int n = resolution;
    if (n < 16 || (n & (n - 1)) != 0)
      throw std::invalid_argument("torus resolution must be a power of two >= 16");
    if (metric.G.rows() != dim || metric.G.cols() != dim)
      throw std::invalid_argument("metric matrix must be d x d");
    const double scale = metric.G.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("metric matrix must be finite and nonzero");
    if ((metric.G - metric.G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("metric matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(metric.G);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("metric matrix must be positive definite");
    if (!metric.phi.empty() && dim != 2)
      throw std::invalid_argument("conformal factors are supported on 2D tori only");
    const int half_band = (n / 2 - 1) / 2;
    for (const auto& mode : metric.phi) {
      if (!std::isfinite(mode.amplitude))
        throw std::invalid_argument("conformal amplitude must be finite");
      for (int a = 0; a < 3; ++a) {
        if (a >= dim && mode.wavevector[a] != 0)
          throw std::invalid_argument("conformal wavevector has components beyond the torus dimension");
        if (std::abs(mode.wavevector[a]) > half_band)
          throw std::invalid_argument("conformal exponent must be band-limited to half the working bandwidth");
      }
    }
  }
};

struct SpectralLine {
  double eigenvalue = 0.0;
  int multiplicity = 0;
};

/// Synthesize sum_j amplitude_j cos(2 pi k_j . x) as a band field.
inline Field cosine_field(const TorusGrid& grid, const std::vector<ConformalMode>& modes) {
  std::vector<cplx> coef(grid.points(), cplx(0.0, 0.0));
  for (const auto& mode : modes) {
    std::array<int, 3> k = mode.wavevector;
    std::array<int, 3> mk{-k[0], -k[1], -k[2]};
    coef[grid.flat_index(k, grid.n)] += cplx(0.5 * mode.amplitude, 0.0);
    coef[grid.flat_index(mk, grid.n)] += cplx(0.5 * mode.amplitude, 0.0);
  }
  return Field::from_coefficients(grid, std::move(coef));
}

namespace detail {

/// Group an ascending list into (value, multiplicity) lines; values within
/// rel_tol of the group representative are merged.
inline std::vector<SpectralLine> group_spectrum(std::vector<double> values, double rel_tol) {
  std::sort(values.begin(), values.end());
  std::vector<SpectralLine> lines;
  for (double v : values) {
    if (!lines.empty() && std::abs(v - lines.back().eigenvalue) <= rel_tol * std::abs(lines.back().eigenvalue))
      ++lines.back().multiplicity;
    else
      lines.push_back({v, 1});
  }
  return lines;
}

}  // namespace detail

/// Quadrature and bilinear-form context for a torus manifold. All integrals
/// are defined as sums over the 2x-oversampled grid with pointwise weight
/// rho = exp(d*phi) * sqrt(det G); for phi = 0 this is exact for band-limited
/// integrands, and for phi != 0 it *defines* the discrete model, keeping every
/// operator identity used downstream exact to rounding.
///
/// Weak-data convention: a linear functional l on the band space is stored as
/// a Field d with l(v) = Re sum_k conj(d_k) v_k (see weak_pairing). mass_weak,
/// dirichlet_weak, pointwise_weak produce such data; solve_energy consumes it.
class Geometry {
 public:
  explicit Geometry(const ManifoldSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.kind != ManifoldKind::torus)
      throw std::invalid_argument("grid geometry exists only for torus manifolds");
    grid_ = spec_.grid();
    Ginv_ = spec_.metric.G.inverse();
    sqrt_det_ = std::sqrt(spec_.metric.G.determinant());
    conformal_ = spec_.conformal();

    alpha_.assign(grid_.points(), 0.0);
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      alpha_[grid_.flat_index(k, grid_.n)] = alpha(k);
    });

    const int m = 2 * grid_.n;
    std::size_t qpts = 1;
    for (int a = 0; a < grid_.dim; ++a) qpts *= static_cast<std::size_t>(m);
    quad_norm_ = 1.0 / static_cast<double>(qpts);
    rho_.assign(qpts, sqrt_det_);
    if (conformal_) {
      const auto phi_vals = phi_field().oversampled_values();
      for (std::size_t q = 0; q < qpts; ++q)
        rho_[q] = std::exp(grid_.dim * phi_vals[q].real()) * sqrt_det_;
    }
    volume_ = 0.0;
    for (double r : rho_) volume_ += r;
    volume_ *= quad_norm_;
  }

  const ManifoldSpec& spec() const { return spec_; }
  const TorusGrid& grid() const { return grid_; }
  bool conformal() const { return conformal_; }
  double sqrt_det_g() const { return sqrt_det_; }
  double volume() const { return volume_; }
  const Eigen::MatrixXd& metric_inverse() const { return Ginv_; }
  const std::vector<double>& quad_weight() const { return rho_; }
  double quad_norm() const { return quad_norm_; }

  /// Flat Dirichlet symbol 4*pi^2 k^T G^{-1} k (phi-independent; in 2D the
  /// Dirichlet form is conformally invariant, in 3D phi = 0 by construction).
  double alpha(const std::array<int, 3>& k) const {
    double q = 0.0;
    for (int i = 0; i < grid_.dim; ++i)
      for (int j = 0; j < grid_.dim; ++j) q += Ginv_(i, j) * k[i] * k[j];
    return 4.0 * std::numbers::pi * std::numbers::pi * q;
  }

  Field phi_field() const { return cosine_field(grid_, spec_.metric.phi); }

  /// integral of f dmu.
  double integrate(const Field& f) const {
    const auto vals = f.oversampled_values();
    double s = 0.0;
    for (std::size_t q = 0; q < vals.size(); ++q) s += vals[q].real() * rho_[q];
    return s * quad_norm_;
  }

  /// integral of u v dmu.
  double mass_form(const Field& u, const Field& v) const {
    const auto a = u.oversampled_values();
    const auto b = v.oversampled_values();
    double s = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) s += a[q].real() * b[q].real() * rho_[q];
    return s * quad_norm_;
  }

  /// integral of g(grad u, grad v) dmu — diagonal in the spectral basis.
  double dirichlet_form(const Field& u, const Field& v) const {
    const auto& a = u.coefficients();
    const auto& b = v.coefficients();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      s += alpha_[i] * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
    return sqrt_det_ * s;
  }

  /// integral of B^{ij} d_i u d_j v sqrt(det G) dx for a constant matrix B in
  /// the flat chart (the shape taken by all metric-variation gradient terms).
  double flat_gradient_form(const Eigen::MatrixXd& B, const Field& u, const Field& v) const {
    const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
    const auto& a = u.coefficients();
    const auto& b = v.coefficients();
    double s = 0.0;
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      double q = 0.0;
      for (int i = 0; i < grid_.dim; ++i)
        for (int j = 0; j < grid_.dim; ++j) q += B(i, j) * k[i] * k[j];
      const std::size_t idx = grid_.flat_index(k, grid_.n);
      s += four_pi2 * q * (a[idx].real() * b[idx].real() + a[idx].imag() * b[idx].imag());
    });
    return sqrt_det_ * s;
  }

  /// Weak data of v -> integral of w v dmu, with w given pointwise on the
  /// oversampled quadrature grid (values need not be band-limited).
  Field pointwise_weak(std::vector<cplx> w) const {
    for (std::size_t q = 0; q < w.size(); ++q) w[q] = cplx(w[q].real() * rho_[q], 0.0);
    return Field::from_oversampled_values(grid_, w);
  }

  /// Weak data of v -> integral of u v dmu for a band field u.
  Field mass_weak(const Field& u) const { return pointwise_weak(u.oversampled_values()); }

  /// Weak data of v -> integral of g(grad u, grad v) dmu.
  Field dirichlet_weak(const Field& u) const {
    Field d(grid_);
    auto coef = u.coefficients();
    for (std::size_t i = 0; i < coef.size(); ++i) coef[i] *= sqrt_det_ * alpha_[i];
    return Field::from_coefficients(grid_, std::move(coef));
  }

  /// Weak data of v -> integral of B^{ij} d_i u d_j v sqrt(det G) dx.
  Field flat_gradient_weak(const Eigen::MatrixXd& B, const Field& u) const {
    const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
    auto coef = u.coefficients();
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      double q = 0.0;
      for (int i = 0; i < grid_.dim; ++i)
        for (int j = 0; j < grid_.dim; ++j) q += B(i, j) * k[i] * k[j];
      coef[grid_.flat_index(k, grid_.n)] *= sqrt_det_ * four_pi2 * q;
    });
    return Field::from_coefficients(grid_, std::move(coef));
  }

  /// Weak data of the energy form: v -> eps^2 Dir(u,v) + integral of u v dmu.
  Field energy_weak(double eps, const Field& u) const {
    Field d = dirichlet_weak(u);
    d *= eps * eps;
    d += mass_weak(u);
    return d;
  }

  /// Solve E(w, v) = data(v) for all band v. Diagonal for phi = 0; PCG with a
  /// spectral diagonal preconditioner otherwise (relative residual 1e-12).
  Field solve_energy(double eps, const Field& data) const {
    return solve_spd(data, [&](const Field& x) { return energy_weak(eps, x); },
                     [&](std::size_t i) { return eps * eps * sqrt_det_ * alpha_[i] + volume_; },
                     [&](std::size_t i) { return sqrt_det_ * (1.0 + eps * eps * alpha_[i]); },
                     "energy");
  }

  /// Solve integral(w v dmu) = data(v) for all band v (L2(mu) Riesz map).
  Field solve_mass(const Field& data) const {
    return solve_spd(data, [&](const Field& x) { return mass_weak(x); },
                     [&](std::size_t) { return volume_; },
                     [&](std::size_t) { return sqrt_det_; }, "mass");
  }

  /// Laplace–Beltrami image in the discrete model: the band field r with
  /// integral(r v dmu) = -Dir(u,v) for all v.
  Field laplacian(const Field& u) const {
    Field d = dirichlet_weak(u);
    d *= -1.0;
    return solve_mass(d);
  }

 private:
  template <typename Op, typename Precond, typename Diag>
  Field solve_spd(const Field& data, Op&& apply, Precond&& precond_diag, Diag&& exact_diag,
                  const char* what) const {
    Field x(grid_);
    if (!conformal_) {
      auto coef = data.coefficients();
      detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
        const std::size_t i = grid_.flat_index(k, grid_.n);
        coef[i] /= exact_diag(i);
      });
      return Field::from_coefficients(grid_, std::move(coef));
    }
    // Preconditioned conjugate gradients in coefficient space.
    const double rhs_norm = data.coefficient_norm();
    if (rhs_norm == 0.0) return x;
    const double tol = 1e-12 * rhs_norm;
    Field r = data;
    Field z = precondition(r, precond_diag);
    Field p = z;
    double rz = dot(r, z);
    for (int it = 0; it < 500; ++it) {
      if (r.coefficient_norm() <= tol) return x;
      Field q = apply(p);
      const double pq = dot(p, q);
      const double a = rz / pq;
      x += a * p;
      r -= a * q;
      z = precondition(r, precond_diag);
      const double rz_new = dot(r, z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (r.coefficient_norm() <= tol) return x;
    std::ostringstream msg;
    msg << what << " solve failed to converge: relative residual "
        << r.coefficient_norm() / rhs_norm;
    throw std::runtime_error(msg.str());
  }

  template <typename Diag>
  Field precondition(const Field& r, Diag&& d) const {
    auto coef = r.coefficients();
    detail::for_each_band_mode(grid_, [&](const std::array<int, 3>& k) {
      const std::size_t i = grid_.flat_index(k, grid_.n);
      coef[i] /= d(i);
    });
    return Field::from_coefficients(grid_, std::move(coef));
  }

  static double dot(const Field& a, const Field& b) {
    const auto& x = a.coefficients();
    const auto& y = b.coefficients();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    return s;
  }

  ManifoldSpec spec_;
  TorusGrid grid_;
  Eigen::MatrixXd Ginv_;
  double sqrt_det_ = 1.0;
  bool conformal_ = false;
  std::vector<double> alpha_;
  std::vector<double> rho_;
  double quad_norm_ = 1.0;
  double volume_ = 1.0;
};

/// Pair a weak-data field with a band field: l(v) = Re sum_k conj(d_k) v_k.
inline double weak_pairing(const Field& data, const Field& v) {
  const auto& d = data.coefficients();
  const auto& w = v.coefficients();
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    s += d[i].real() * w[i].real() + d[i].imag() * w[i].imag();
  return s;
}

inline double volume(const ManifoldSpec& m) {
  m.validate();
  if (m.kind == ManifoldKind::sphere)
    return 4.0 * std::numbers::pi * m.metric.radius * m.metric.radius;
  if (!m.conformal()) return std::sqrt(m.metric.G.determinant());
  return Geometry(m).volume();
}

namespace detail {

/// Flat-torus spectrum by brute-force lattice enumeration, enlarging the
/// search box until the first `count` distinct values are certified complete.
inline std::vector<SpectralLine> lattice_spectrum(const ManifoldSpec& m, int count) {
  Eigen::MatrixXd Ginv = m.metric.G.inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ginv);
  const double lam_min = es.eigenvalues().minCoeff();
  const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
  for (int box = 8; box <= 1024; box *= 2) {
    std::vector<double> values;
    std::array<int, 3> k{0, 0, 0};
    const int zmax = m.dim == 3 ? box : 0;
    for (k[0] = -box; k[0] <= box; ++k[0])
      for (k[1] = -box; k[1] <= box; ++k[1])
        for (k[2] = -zmax; k[2] <= zmax; ++k[2]) {
          if (k[0] == 0 && k[1] == 0 && k[2] == 0) continue;
          double q = 0.0;
          for (int i = 0; i < m.dim; ++i)
            for (int j = 0; j < m.dim; ++j) q += Ginv(i, j) * k[i] * k[j];
          values.push_back(four_pi2 * q);
        }
    // Any mode outside the box has eigenvalue >= reliable; lines below it are final.
    const double reliable = four_pi2 * lam_min * (box + 1.0) * (box + 1.0);
    auto lines = detail::group_spectrum(std::move(values), 1e-12);
    std::vector<SpectralLine> certain;
    for (const auto& line : lines)
      if (line.eigenvalue < reliable) certain.push_back(line);
    if (static_cast<int>(certain.size()) >= count) {
      certain.resize(count);
      return certain;
    }
  }
  throw std::runtime_error("lattice spectrum enumeration exceeded box limit");
}

/// Smallest generalized eigenvalues of Dir(v,.) = theta * Mass(v,.) on the
/// mu-mean-zero subspace, by blocked shift-and-invert subspace iteration with
/// Rayleigh–Ritz extraction. Relative residual target 1e-10.
inline std::vector<double> mean_zero_spectrum(const Geometry& geo, int want) {
  const TorusGrid& grid = geo.grid();
  const double sigma = 1.0;  // spectral shift; Dir + sigma*Mass is SPD
  const double inv_eps = std::sqrt(1.0 / sigma);
  const int block = want + 6;

  // Deterministic start: the lowest flat trig modes, projected mean-zero.
  std::vector<Field> X;
  std::vector<std::pair<double, std::array<int, 3>>> modes;
  detail::for_each_band_mode(grid, [&](const std::array<int, 3>& k) {
    if (k[0] == 0 && k[1] == 0 && k[2] == 0) return;
    bool positive = k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)));
    if (positive) modes.push_back({geo.alpha(k), k});
  });
  std::sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  });
  if (static_cast<int>(2 * modes.size()) < block)
    throw std::runtime_error("eigensolver block exceeds discrete bandwidth");
  for (int j = 0; static_cast<int>(X.size()) < block; ++j) {
    const auto& k = modes[static_cast<std::size_t>(j)].second;
    Field c(grid), s(grid);
    c.set_coefficient(k, cplx(0.5, 0.0));
    s.set_coefficient(k, cplx(0.0, -0.5));
    X.push_back(c);
    if (static_cast<int>(X.size()) < block) X.push_back(s);
  }

  auto project = [&](Field& f) {
    const double c = geo.integrate(f) / geo.volume();
    Field one = Field::constant(grid, c);
    f -= one;
  };

  std::vector<double> theta;
  std::vector<double> residuals;
  for (int iter = 0; iter < 200; ++iter) {
    // Y = (Dir + sigma M)^{-1} M X, restricted to the mean-zero subspace.
    std::vector<Field> Y;
    Y.reserve(X.size());
    for (const auto& x : X) {
      Field w = geo.mass_weak(x);
      w *= 1.0 / sigma;
      Field y = geo.solve_energy(inv_eps, w);
      project(y);
      Y.push_back(std::move(y));
    }
    // M-orthonormalize (modified Gram–Schmidt).
    for (std::size_t i = 0; i < Y.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double c = geo.mass_form(Y[j], Y[i]);
        Y[i] -= c * Y[j];
      }
      const double nrm = std::sqrt(geo.mass_form(Y[i], Y[i]));
      if (!(nrm > 1e-14)) throw std::runtime_error("eigensolver block became degenerate");
      Y[i] *= 1.0 / nrm;
    }
    // Rayleigh–Ritz in the block.
    const int m = static_cast<int>(Y.size());
    Eigen::MatrixXd Ad(m, m), Md(m, m);
    std::vector<Field> DW, MW;
    DW.reserve(Y.size());
    MW.reserve(Y.size());
    for (const auto& y : Y) {
      DW.push_back(geo.dirichlet_weak(y));
      MW.push_back(geo.mass_weak(y));
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Ad(i, j) = weak_pairing(DW[static_cast<std::size_t>(j)], Y[static_cast<std::size_t>(i)]);
        Md(i, j) = weak_pairing(MW[static_cast<std::size_t>(j)], Y[static_cast<std::size_t>(i)]);
      }
    Ad = 0.5 * (Ad + Ad.transpose()).eval();
    Md = 0.5 * (Md + Md.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ad, Md);
    std::vector<Field> Z;
    Z.reserve(Y.size());
    for (int c = 0; c < m; ++c) {
      Field z(grid);
      for (int r = 0; r < m; ++r) z += ges.eigenvectors()(r, c) * Y[static_cast<std::size_t>(r)];
      Z.push_back(std::move(z));
    }
    X = std::move(Z);
    theta.assign(ges.eigenvalues().data(), ges.eigenvalues().data() + m);

    const int need = std::min(want + 2, m - 2);
    residuals.clear();
    bool done = true;
    for (int i = 0; i < need; ++i) {
      Field dw = geo.dirichlet_weak(X[static_cast<std::size_t>(i)]);
      Field mw = geo.mass_weak(X[static_cast<std::size_t>(i)]);
      Field r = dw - theta[static_cast<std::size_t>(i)] * mw;
      const double rel = r.coefficient_norm() /
                         (dw.coefficient_norm() + theta[static_cast<std::size_t>(i)] * mw.coefficient_norm());
      residuals.push_back(rel);
      if (rel > 1e-10) done = false;
    }
    if (done) {
      theta.resize(static_cast<std::size_t>(std::min(want, need)));
      return theta;
    }
  }
  std::ostringstream msg;
  msg << "eigensolver failed to converge; relative residuals:";
  for (double r : residuals) msg << " " << r;
  throw std::runtime_error(msg.str());
}

}  // namespace detail

/// First `count` distinct nonzero eigenvalues of -Laplace_g with
/// multiplicities, increasing. Analytic for spheres and flat tori; numerical
/// (mean-zero iterative eigensolve) for conformal torus metrics.
inline std::vector<SpectralLine> laplacian_spectrum(const ManifoldSpec& m, int count) {
  m.validate();
  if (count < 1) throw std::invalid_argument("spectrum count must be >= 1");
  if (m.kind == ManifoldKind::sphere) {
    std::vector<SpectralLine> lines;
    const double r2 = m.metric.radius * m.metric.radius;
    for (int l = 1; l <= count; ++l)
      lines.push_back({static_cast<double>(l) * (l + 1) / r2, 2 * l + 1});
    return lines;
  }
  if (!m.conformal()) return detail::lattice_spectrum(m, count);

  Geometry geo(m);
  int want = 4 * count + 4;
  for (int round = 0; round < 3; ++round) {
    auto theta = detail::mean_zero_spectrum(geo, want);
    auto lines = detail::group_spectrum(theta, 1e-7);
    if (static_cast<int>(lines.size()) >= count) {
      lines.resize(static_cast<std::size_t>(count));
      return lines;
    }
    want *= 2;
  }
  throw std::runtime_error("spectrum computation did not yield enough distinct eigenvalues");
}

}  // namespace aclab
