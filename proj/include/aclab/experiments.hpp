// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aclab/config.hpp"
#include "aclab/degeneracy.hpp"
#include "aclab/oracle1d.hpp"
#include "aclab/rng.hpp"
#include "aclab/solver.hpp"
#include "aclab/version.hpp"

namespace aclab {

/// One named result invariant; failures drive the itemized-failure exit code.
struct CheckItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Outcome of one experiment run: a deterministic result document plus the
/// check list (mirrored into the document) and wall time. Timing is kept out
/// of the document so reruns reproduce it byte-for-byte.
struct RunRecord {
  json doc;
  std::vector<CheckItem> checks;
  double wall_seconds = 0.0;

  bool any_failure() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const CheckItem& c) { return !c.pass; });
  }
};

namespace detail {

/// Stream seed for work item i, independent of scheduling order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t i) {
  char bytes[16];
  std::memcpy(bytes, &seed, 8);
  std::memcpy(bytes + 8, &i, 8);
  return fnv1a(std::string_view(bytes, 16));
}

inline std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Index-parallel loop with deterministic work assignment by index; the first
/// worker exception is rethrown after join.
template <class F>
void parallel_for(int n, int threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(threads, n);
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline void add_check(RunRecord& rec, std::string name, bool pass, std::string detail) {
  rec.checks.push_back({std::move(name), pass, std::move(detail)});
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline RunRecord make_record(const RunConfig& cfg) {
  RunRecord rec;
  json snap = cfg.snapshot();
  rec.doc["schema_version"] = kSchemaVersion;
  rec.doc["tool"] = json{{"name", kToolName}, {"version", kToolVersion}};
  rec.doc["kind"] = cfg.experiment.kind;
  rec.doc["input_hash"] = hex16(fnv1a(snap.dump()));
  rec.doc["config"] = std::move(snap);
  rec.doc["results"] = json::object();
  rec.doc["notes"] = json::array();
  if (cfg.experiment.nu == 0.0)
    rec.doc["notes"].push_back(
        "nu = 0 lies outside the hypothesis of the nondegeneracy theorem; "
        "results are reported for the symmetric case only");
  return rec;
}

/// Copies the check list into the document; call once per runner, at the end.
inline void seal_checks(RunRecord& rec) {
  json arr = json::array();
  for (const CheckItem& c : rec.checks)
    arr.push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  rec.doc["checks"] = std::move(arr);
}

inline json solution_json(const Geometry& geo, const Potential& pot, const Solution& sol,
                          bool with_values) {
  json s;
  s["eps"] = sol.eps;
  s["nu"] = sol.nu;
  s["lambda"] = sol.lambda;
  s["residual"] = sol.residual;
  s["iterations"] = sol.iterations;
  s["mass"] = geo.integrate(sol.u);
  s["energy"] = lagrangian_value(geo, sol.eps, pot, sol.u, sol.lambda, sol.nu);
  if (std::isfinite(sol.contraction)) s["contraction"] = sol.contraction;
  s["contraction_ok"] = sol.contraction_ok;
  const auto vals = sol.u.values();
  double lo = vals[0].real(), hi = vals[0].real();
  for (const cplx& v : vals) {
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
  }
  s["u_min"] = lo;
  s["u_max"] = hi;
  if (with_values) {
    const auto& grid = sol.u.grid();
    json shape = json::array();
    for (int a = 0; a < grid.dim; ++a) shape.push_back(grid.n);
    s["shape"] = std::move(shape);
    json values = json::array();
    for (const cplx& v : vals) values.push_back(v.real());
    s["values"] = std::move(values);
  }
  return s;
}

inline json degeneracy_json(const DegeneracyReport& rep) {
  json d;
  d["sigma_min"] = rep.sigma_min;
  d["sigma_max"] = rep.sigma_max;
  d["sigma_ratio"] = rep.sigma_min / rep.sigma_max;
  d["kernel_dimension"] = rep.kernel_dimension;
  d["classification"] = to_string(rep.classification);
  d["smallest"] = rep.smallest;
  if (rep.predicted) {
    json arr = json::array();
    for (const PredictedDegeneracy& p : *rep.predicted)
      arr.push_back(json{{"eps", p.eps},
                         {"eigenvalue", p.eigenvalue},
                         {"multiplicity", p.multiplicity}});
    d["predicted"] = std::move(arr);
  }
  return d;
}

/// Initial state for solve/census starts; the constant offset pins the mass
/// constraint at the start.
inline Field initial_field(const ExperimentConfig& ex, const Geometry& geo, Rng& rng) {
  Field u = Field::constant(geo.grid(), 0.0);
  if (ex.init == "cosine")
    u = cosine_field(geo.grid(), {{ex.init_wavevector, ex.init_amplitude}});
  else if (ex.init == "random")
    u = rng.smooth_field(geo.grid(), ex.init_amplitude, 2.0, 0.0);
  else if (ex.init != "constant")
    throw std::runtime_error("unknown init kind '" + ex.init + "'");
  const double offset = (ex.nu - geo.integrate(u)) / geo.volume();
  u += Field::constant(geo.grid(), offset);
  return u;
}

/// Best translation s maximizing the L2(dx) correlation of u(.-s) with v:
/// grid argmax of the inverse transform of conj(u_k conj(v_k)), then cyclic
/// per-axis golden refinement of the trigonometric correlation.
inline std::array<double, 3> best_translation(const Field& u, const Field& v) {
  const TorusGrid& grid = u.grid();
  struct Term {
    std::array<int, 3> k;
    cplx w;
  };
  std::vector<Term> terms;
  std::vector<cplx> corr(grid.points(), cplx(0.0, 0.0));
  for_each_band_mode(grid, [&](const std::array<int, 3>& k) {
    const std::size_t idx = grid.flat_index(k, grid.n);
    const cplx w = u.coefficients()[idx] * std::conj(v.coefficients()[idx]);
    if (std::abs(w) > 0.0) terms.push_back({k, w});
    corr[idx] = std::conj(w);
  });
  std::vector<cplx> corr_vals;
  dft_values(grid.dim, grid.n, corr, corr_vals);
  std::size_t best = 0;
  for (std::size_t q = 1; q < corr_vals.size(); ++q)
    if (corr_vals[q].real() > corr_vals[best].real()) best = q;
  std::array<double, 3> s{0.0, 0.0, 0.0};
  {
    std::size_t rem = best;
    for (int a = grid.dim - 1; a >= 0; --a) {
      s[a] = static_cast<double>(rem % static_cast<std::size_t>(grid.n)) / grid.n;
      rem /= static_cast<std::size_t>(grid.n);
    }
  }
  const auto score = [&](const std::array<double, 3>& shift) {
    double c = 0.0;
    for (const Term& t : terms) {
      const double phase = -2.0 * std::numbers::pi *
                           (t.k[0] * shift[0] + t.k[1] * shift[1] + t.k[2] * shift[2]);
      c += (t.w * std::polar(1.0, phase)).real();
    }
    return c;
  };
  const double phi_ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int pass = 0; pass < 3; ++pass) {
    for (int a = 0; a < grid.dim; ++a) {
      double lo = s[a] - 1.0 / grid.n, hi = s[a] + 1.0 / grid.n;
      auto at = [&](double t) {
        auto sh = s;
        sh[a] = t;
        return score(sh);
      };
      double x1 = hi - phi_ratio * (hi - lo), x2 = lo + phi_ratio * (hi - lo);
      double f1 = at(x1), f2 = at(x2);
      while (hi - lo > 1e-12) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + phi_ratio * (hi - lo);
          f2 = at(x2);
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - phi_ratio * (hi - lo);
          f1 = at(x1);
        }
      }
      s[a] = 0.5 * (lo + hi);
    }
  }
  return s;
}

/// Translation-aligned flat L2 distance between two band fields.
inline double aligned_distance(const Field& u, const Field& v) {
  const auto s = best_translation(u, v);
  return (u.translated(s) - v).coefficient_norm();
}

/// Axis index if the fluctuation of u is supported on a single coordinate
/// axis of the mode lattice; nullopt for constants and genuinely 2D states.
inline std::optional<int> stripe_axis(const Field& u, double rel_tol = 1e-8) {
  const TorusGrid& grid = u.grid();
  double total = 0.0;
  std::array<double, 3> on_axis{0.0, 0.0, 0.0};
  for_each_band_mode(grid, [&](const std::array<int, 3>& k) {
    if (k[0] == 0 && k[1] == 0 && k[2] == 0) return;
    const double e = std::norm(u.coefficients()[grid.flat_index(k, grid.n)]);
    total += e;
    for (int a = 0; a < grid.dim; ++a) {
      bool pure = true;
      for (int b = 0; b < grid.dim; ++b)
        if (b != a && k[b] != 0) pure = false;
      if (pure && k[a] != 0) on_axis[a] += e;
    }
  });
  if (total <= 1e-20) return std::nullopt;
  for (int a = 0; a < grid.dim; ++a)
    if (total - on_axis[a] <= rel_tol * rel_tol * total) return a;
  return std::nullopt;
}

inline void require_torus(const RunConfig& cfg) {
  if (cfg.manifold.kind != ManifoldKind::torus)
    throw std::runtime_error(
        "experiment '" + cfg.experiment.kind +
        "' needs a torus manifold; the sphere pathway supports degenerate-eps only");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

inline RunRecord run_solve(const RunConfig& cfg, int /*threads*/ = 1) {
  detail::require_torus(cfg);
  Geometry geo(cfg.manifold);
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);

  Rng rng(ex.seed);
  Field u0 = detail::initial_field(ex, geo, rng);
  if (cfg.solver.flow_steps > 0)
    u0 = gradient_flow(geo, ex.eps, pot, ex.nu, u0, cfg.solver.flow_steps, cfg.solver.flow_dt);
  const Solution sol =
      newton_solve(geo, ex.eps, pot, ex.nu, u0, ex.lambda0, cfg.solver.newton());
  const DegeneracyReport rep = min_singular(geo, ex.eps, pot, sol.u);

  rec.doc["results"]["solution"] = detail::solution_json(geo, pot, sol, true);
  rec.doc["results"]["degeneracy"] = detail::degeneracy_json(rep);

  const double mass_err = std::abs(geo.integrate(sol.u) - ex.nu);
  detail::add_check(rec, "residual_below_tol", sol.residual <= cfg.solver.tol,
                    "residual " + detail::fmt(sol.residual) + " vs tol " +
                        detail::fmt(cfg.solver.tol));
  detail::add_check(rec, "mass_constraint", mass_err <= 1e-10,
                    "|mass - nu| = " + detail::fmt(mass_err));
  detail::add_check(rec, "quadratic_contraction", sol.contraction_ok || sol.iterations == 0,
                    sol.iterations == 0 ? "converged at the initial state"
                                        : "contraction " + detail::fmt(sol.contraction));
  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

namespace detail {

struct SweepRow {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  double lambda = 0.0, residual = 0.0;
  double sigma_min = 0.0, sigma_max = 0.0;
  std::string classification;
  Field u;
};

/// Dip location by a least-squares quadratic through the sampled rows.  Near a
/// simple root sigma behaves like |g| for smooth g, so the quadratic is fitted
/// to *signed* values: every sign-flip position across the window is tried and
/// the hypothesis with the smallest residual wins; the dip is the fitted root
/// nearest the window center.  Falls back to the vertex of a parabola through
/// sigma^2 when no admissible root exists.
inline double dip_vertex(const std::vector<double>& xs, const std::vector<double>& ys,
                         double fallback) {
  const int m = static_cast<int>(xs.size());
  const double span = std::max(std::abs(xs.front()), std::abs(xs.back()));
  Eigen::MatrixXd A(m, 3);
  for (int i = 0; i < m; ++i) {
    const double x = xs[static_cast<std::size_t>(i)];
    A(i, 0) = x * x;
    A(i, 1) = x;
    A(i, 2) = 1.0;
  }
  const auto fit = [&](const Eigen::VectorXd& y) {
    const Eigen::Vector3d c = (A.transpose() * A).ldlt().solve(A.transpose() * y);
    return std::make_pair(c, (A * c - y).squaredNorm());
  };

  double best_resid = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  Eigen::VectorXd y(m);
  for (int flip = 1; flip < m; ++flip) {
    for (int i = 0; i < m; ++i)
      y(i) = (i < flip ? -1.0 : 1.0) * ys[static_cast<std::size_t>(i)];
    const auto [c, resid] = fit(y);
    if (resid < best_resid) {
      best_resid = resid;
      best = c;
    }
  }
  const double disc = best(1) * best(1) - 4.0 * best(0) * best(2);
  if (disc >= 0.0) {
    const double q = -0.5 * (best(1) + std::copysign(std::sqrt(disc), best(1)));
    double root = std::numeric_limits<double>::quiet_NaN();
    if (q != 0.0) root = best(2) / q;  // the root that stays finite as best(0) -> 0
    if (best(0) != 0.0 && q != 0.0 && std::abs(q / best(0)) < std::abs(root))
      root = q / best(0);
    if (std::isfinite(root) && std::abs(root) <= span) return fallback + root;
  }
  for (int i = 0; i < m; ++i) {
    const double v = ys[static_cast<std::size_t>(i)];
    y(i) = v * v;
  }
  const auto [c, resid] = fit(y);
  static_cast<void>(resid);
  if (!(c(0) > 0.0)) return fallback;
  const double vertex = -c(1) / (2.0 * c(0));
  return std::abs(vertex) <= span ? fallback + vertex : fallback;
}

}  // namespace detail

inline RunRecord run_sweep(const RunConfig& cfg, int threads = 1) {
  detail::require_torus(cfg);
  Geometry geo(cfg.manifold);
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);

  if (!(ex.eps_step > 0.0) || !(ex.eps_max >= ex.eps_min))
    throw std::runtime_error("sweep needs eps_step > 0 and eps_max >= eps_min");
  const int n = static_cast<int>(std::lround((ex.eps_max - ex.eps_min) / ex.eps_step)) + 1;
  std::vector<double> eps_list(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eps_list[static_cast<std::size_t>(i)] = ex.eps_min + i * ex.eps_step;

  const NewtonOptions nopt = cfg.solver.newton();
  std::vector<detail::SweepRow> rows(static_cast<std::size_t>(n));

  auto solve_row = [&](double eps, const Field& init, double lambda0) {
    detail::SweepRow row;
    row.eps = eps;
    const Solution sol = newton_solve(geo, eps, pot, ex.nu, init, lambda0, nopt);
    const auto [smin, smax] = singular_extremes(geo, eps, pot, sol.u);
    row.ok = true;
    row.lambda = sol.lambda;
    row.residual = sol.residual;
    row.sigma_min = smin;
    row.sigma_max = smax;
    row.classification = to_string(classify_sigma(smin, smax));
    row.u = sol.u;
    return row;
  };

  if (ex.branch == "constant") {
    detail::parallel_for(n, threads, [&](int i) {
      const double eps = eps_list[static_cast<std::size_t>(i)];
      auto [u0, l0] = constant_solution(geo, pot, ex.nu);
      try {
        rows[static_cast<std::size_t>(i)] = solve_row(eps, u0, l0);
      } catch (const std::exception& e) {
        rows[static_cast<std::size_t>(i)].eps = eps;
        rows[static_cast<std::size_t>(i)].error = e.what();
      }
    });
  } else if (ex.branch == "continued") {
    Rng rng(ex.seed);
    Field u0 = detail::initial_field(ex, geo, rng);
    double l0 = ex.lambda0;
    for (int i = 0; i < n; ++i) {
      const double eps = eps_list[static_cast<std::size_t>(i)];
      try {
        rows[static_cast<std::size_t>(i)] = solve_row(eps, u0, l0);
        u0 = rows[static_cast<std::size_t>(i)].u;
        l0 = rows[static_cast<std::size_t>(i)].lambda;
      } catch (const std::exception& e) {
        rows[static_cast<std::size_t>(i)].eps = eps;
        rows[static_cast<std::size_t>(i)].error = e.what();
      }
    }
  } else {
    throw std::runtime_error("unknown sweep branch '" + ex.branch + "'");
  }

  json rows_json = json::array();
  int failed_rows = 0;
  for (const auto& row : rows) {
    json r;
    r["eps"] = row.eps;
    if (row.ok) {
      r["lambda"] = row.lambda;
      r["residual"] = row.residual;
      r["sigma_min"] = row.sigma_min;
      r["sigma_max"] = row.sigma_max;
      r["classification"] = row.classification;
    } else {
      r["error"] = row.error;
      ++failed_rows;
    }
    rows_json.push_back(std::move(r));
  }
  rec.doc["results"]["rows"] = std::move(rows_json);
  {
    // Continuity diagnostic: largest adjacent-row jump of sigma_min.
    double max_jump = 0.0;
    for (int i = 1; i < n; ++i) {
      const auto& a = rows[static_cast<std::size_t>(i - 1)];
      const auto& b = rows[static_cast<std::size_t>(i)];
      if (a.ok && b.ok) max_jump = std::max(max_jump, std::abs(b.sigma_min - a.sigma_min));
    }
    rec.doc["results"]["max_adjacent_sigma_jump"] = max_jump;
  }

  const auto predictions = degenerate_epsilons(cfg.manifold, pot, ex.nu, ex.j_max);
  json pred_json = json::array();
  for (const auto& p : predictions)
    pred_json.push_back(json{
        {"eps", p.eps}, {"eigenvalue", p.eigenvalue}, {"multiplicity", p.multiplicity}});
  rec.doc["results"]["predictions"] = std::move(pred_json);

  // Dip pipeline: strict interior minima of sigma_min with nondegenerate
  // flanks, located by the quadratic fit, confirmed and sharpened by golden
  // refinement, then classified at the refined point.
  struct Dip {
    double eps_fit = 0.0, eps_refined = 0.0, sigma_refined = 0.0;
    int kernel_dimension = 0;
    std::string classification;
  };
  std::vector<Dip> dips;
  auto sigma_at = [&](double e, const Field& init, double lambda0) {
    const Solution s = newton_solve(geo, e, pot, ex.nu, init, lambda0, nopt);
    return singular_extremes(geo, e, pot, s.u).first;
  };
  for (int i = 1; i + 1 < n; ++i) {
    const auto& left = rows[static_cast<std::size_t>(i - 1)];
    const auto& mid = rows[static_cast<std::size_t>(i)];
    const auto& right = rows[static_cast<std::size_t>(i + 1)];
    if (!left.ok || !mid.ok || !right.ok) continue;
    const double flank = std::min(left.sigma_min, right.sigma_min);
    if (!(mid.sigma_min < left.sigma_min && mid.sigma_min <= right.sigma_min)) continue;
    if (!(flank > 1e-6 * mid.sigma_max)) continue;  // symmetry noise floor
    std::vector<double> xs, ys;
    for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
      if (!rows[static_cast<std::size_t>(j)].ok) continue;
      xs.push_back(eps_list[static_cast<std::size_t>(j)] - mid.eps);
      ys.push_back(rows[static_cast<std::size_t>(j)].sigma_min);
    }
    Dip dip;
    dip.eps_fit = detail::dip_vertex(xs, ys, mid.eps);
    const Field& init = mid.u;
    const double l0 = mid.lambda;
    double lo = left.eps, hi = right.eps;
    const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gold * (hi - lo), x2 = lo + gold * (hi - lo);
    double f1 = sigma_at(x1, init, l0), f2 = sigma_at(x2, init, l0);
    while (hi - lo > 1e-12) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gold * (hi - lo);
        f1 = sigma_at(x1, init, l0);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gold * (hi - lo);
        f2 = sigma_at(x2, init, l0);
      }
    }
    dip.eps_refined = 0.5 * (lo + hi);
    const Solution at_dip = newton_solve(geo, dip.eps_refined, pot, ex.nu, init, l0, nopt);
    const DegeneracyReport rep = min_singular(geo, dip.eps_refined, pot, at_dip.u);
    dip.sigma_refined = rep.sigma_min;
    dip.kernel_dimension = rep.kernel_dimension;
    dip.classification = to_string(rep.classification);
    if (dip.sigma_refined <= 1e-3 * flank) dips.push_back(dip);
  }

  json dips_json = json::array();
  for (const auto& d : dips) {
    json entry;
    entry["eps_fit"] = d.eps_fit;
    entry["eps_refined"] = d.eps_refined;
    entry["sigma_refined"] = d.sigma_refined;
    entry["kernel_dimension"] = d.kernel_dimension;
    entry["classification"] = d.classification;
    double best_rel = std::numeric_limits<double>::infinity();
    const PredictedDegeneracy* best = nullptr;
    for (const auto& p : predictions) {
      const double rel = std::abs(d.eps_fit - p.eps) / p.eps;
      if (rel < best_rel) {
        best_rel = rel;
        best = &p;
      }
    }
    if (best) {
      entry["nearest_prediction"] = best->eps;
      entry["relative_mismatch"] = best_rel;
      entry["predicted_multiplicity"] = best->multiplicity;
    }
    dips_json.push_back(std::move(entry));
  }
  rec.doc["results"]["dips"] = std::move(dips_json);

  detail::add_check(rec, "all_rows_solved", failed_rows == 0,
                    std::to_string(failed_rows) + " of " + std::to_string(n) +
                        " rows failed");
  if (ex.branch == "constant") {
    for (std::size_t j = 0; j < predictions.size(); ++j) {
      const double p = predictions[j].eps;
      if (p < ex.eps_min + ex.eps_step || p > ex.eps_max - ex.eps_step) continue;
      double best_rel = std::numeric_limits<double>::infinity();
      for (const auto& d : dips) best_rel = std::min(best_rel, std::abs(d.eps_fit - p) / p);
      detail::add_check(rec, "prediction_" + std::to_string(j) + "_detected",
                        best_rel <= 1e-4,
                        "predicted eps " + detail::fmt(p) + ", relative mismatch " +
                            detail::fmt(best_rel));
    }
    for (std::size_t j = 0; j < dips.size(); ++j) {
      double best_rel = std::numeric_limits<double>::infinity();
      for (const auto& p : predictions)
        best_rel = std::min(best_rel, std::abs(dips[j].eps_fit - p.eps) / p.eps);
      detail::add_check(rec, "dip_" + std::to_string(j) + "_matches_prediction",
                        best_rel <= 1e-4,
                        "dip at " + detail::fmt(dips[j].eps_fit) + ", relative mismatch " +
                            detail::fmt(best_rel));
    }
  }
  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// degenerate-eps
// ---------------------------------------------------------------------------

inline RunRecord run_degenerate_eps(const RunConfig& cfg, int /*threads*/ = 1) {
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);

  const double vol = volume(cfg.manifold);
  const double w2 = pot.d2W(ex.nu / vol);
  rec.doc["results"]["volume"] = vol;
  rec.doc["results"]["w2_at_mean"] = w2;
  const auto list = degenerate_epsilons(cfg.manifold, pot, ex.nu, ex.j_max);
  json arr = json::array();
  for (std::size_t j = 0; j < list.size(); ++j)
    arr.push_back(json{{"j", j + 1},
                       {"eps", list[j].eps},
                       {"eigenvalue", list[j].eigenvalue},
                       {"multiplicity", list[j].multiplicity}});
  rec.doc["results"]["predictions"] = std::move(arr);
  if (list.empty())
    rec.doc["results"]["empty_reason"] =
        w2 >= 0.0 ? "W'' at the mean is nonnegative; the constant branch never degenerates"
                  : "no eigenvalues requested";

  bool decreasing = true;
  for (std::size_t j = 1; j < list.size(); ++j)
    if (!(list[j].eps < list[j - 1].eps)) decreasing = false;
  detail::add_check(rec, "eps_strictly_decreasing", decreasing,
                    std::to_string(list.size()) + " predictions");
  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// check-calculus
// ---------------------------------------------------------------------------

namespace detail {

struct CalculusSample {
  // Relative errors of the Richardson-extrapolated central difference against
  // each closed-form derivative, plus the observed convergence order.
  std::array<double, 5> error{};
  std::array<double, 5> order{};
  std::array<bool, 5> order_valid{};
};

inline double aug_norm(const AugmentedField& a) {
  return std::sqrt(a.field.coefficient_norm() * a.field.coefficient_norm() +
                   a.scalar * a.scalar);
}

inline CalculusSample calculus_sample(const ManifoldSpec& base, const Potential& pot,
                                      std::uint64_t seed) {
  Rng rng(seed);
  const int d = base.dim;

  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      const double t = 0.3 * rng.uniform(-1.0, 1.0);
      G(a, b) += t;
      if (b != a) G(b, a) += t;
    }
  if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff() < 0.2)
    G = Eigen::MatrixXd::Identity(d, d);

  std::vector<ConformalMode> phi;
  const std::array<std::array<int, 3>, 3> pool{{{1, 0, 0}, {0, 1, 0}, {1, 1, 0}}};
  if (d == 2 && rng.uniform01() < 0.5)
    phi.push_back({pool[static_cast<std::size_t>(rng.index(3))], rng.uniform(0.05, 0.2)});
  const ManifoldSpec spec = ManifoldSpec::torus(d, base.resolution, G, phi);
  Geometry geo(spec);

  const double eps = rng.uniform(0.2, 0.8);
  const Field u = [&] {
    Field f = rng.smooth_field(geo.grid(), 0.5, 2.0);
    f.set_mean(rng.uniform(-0.3, 0.3));
    return f;
  }();
  const Field v = rng.smooth_field(geo.grid(), 0.3, 2.0, rng.uniform(-0.2, 0.2));
  const Field f = rng.smooth_field(geo.grid(), 0.4, 2.0, rng.uniform(-0.2, 0.2));
  const double lambda = rng.uniform(-0.5, 0.5);
  const double Lambda = rng.uniform(-0.5, 0.5);
  const double eta = rng.uniform(-0.5, 0.5);

  MetricDirection dir = MetricDirection::constant(Eigen::MatrixXd::Zero(d, d));
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      const double t = rng.uniform(-0.5, 0.5);
      dir.H(a, b) += t;
      if (b != a) dir.H(b, a) += t;
    }
  if (d == 2 && rng.uniform01() < 0.5)
    dir.psi.push_back({pool[static_cast<std::size_t>(rng.index(3))], rng.uniform(-0.4, 0.4)});

  const double t1 = 1e-3, t2 = 5e-4;
  const std::array<double, 4> ts{t1, -t1, t2, -t2};
  std::array<std::optional<Geometry>, 4> disp;
  for (std::size_t q = 0; q < 4; ++q) disp[q].emplace(displaced_spec(spec, dir, ts[q]));

  CalculusSample out;
  const auto record = [&](int slot, double err1, double err2, double err_extrap) {
    out.error[static_cast<std::size_t>(slot)] = err_extrap;
    if (err2 > 1e-11) {
      out.order[static_cast<std::size_t>(slot)] = std::log2(err1 / err2);
      out.order_valid[static_cast<std::size_t>(slot)] = true;
    }
  };

  {  // dE: first variation of the energy inner product
    const auto value = [&](std::size_t q) {
      return energy_inner(*disp[q], eps + ts[q] * eta, u, v);
    };
    const double fd1 = (value(0) - value(1)) / (2.0 * t1);
    const double fd2 = (value(2) - value(3)) / (2.0 * t2);
    const double formula = energy_inner_variation(geo, eps, eta, dir, u, v);
    const double scale = std::max({std::abs(formula), std::abs(fd2), 1e-10});
    record(0, std::abs(fd1 - formula) / scale, std::abs(fd2 - formula) / scale,
           std::abs((4.0 * fd2 - fd1) / 3.0 - formula) / scale);
  }

  const auto f_vals = f.oversampled_values();
  {  // dA: resolvent variation at fixed pointwise data
    const auto value = [&](std::size_t q) {
      return disp[q]->solve_energy(eps + ts[q] * eta, disp[q]->pointwise_weak(f_vals));
    };
    const Field a_p1 = value(0), a_m1 = value(1), a_p2 = value(2), a_m2 = value(3);
    const Field fd1 = (a_p1 - a_m1) * (1.0 / (2.0 * t1));
    const Field fd2 = (a_p2 - a_m2) * (1.0 / (2.0 * t2));
    const Field formula = resolvent_variation_weak(geo, eps, eta, dir, f_vals);
    const Field extrap = (fd2 * 4.0 - fd1) * (1.0 / 3.0);
    const double scale = std::max({formula.coefficient_norm(), fd2.coefficient_norm(), 1e-10});
    record(1, (fd1 - formula).coefficient_norm() / scale,
           (fd2 - formula).coefficient_norm() / scale,
           (extrap - formula).coefficient_norm() / scale);
  }

  {  // dB: derivative of the reaction map
    const auto value = [&](double t) {
      Field w = u + v * t;
      return reaction(pot, w, lambda + t * Lambda);
    };
    const Field fd1 = (value(t1) - value(-t1)) * (1.0 / (2.0 * t1));
    const Field fd2 = (value(t2) - value(-t2)) * (1.0 / (2.0 * t2));
    const Field formula = reaction_derivative(pot, u, v, Lambda);
    const Field extrap = (fd2 * 4.0 - fd1) * (1.0 / 3.0);
    const double scale = std::max({formula.coefficient_norm(), fd2.coefficient_norm(), 1e-10});
    record(2, (fd1 - formula).coefficient_norm() / scale,
           (fd2 - formula).coefficient_norm() / scale,
           (extrap - formula).coefficient_norm() / scale);
  }

  {  // dF, state block
    const auto value = [&](double t) {
      return solution_map(geo, eps, pot, u + v * t, lambda + t * Lambda);
    };
    const auto diff = [&](AugmentedField hi2, const AugmentedField& lo2, double t) {
      hi2.field -= lo2.field;
      hi2.field *= 1.0 / (2.0 * t);
      hi2.scalar = (hi2.scalar - lo2.scalar) / (2.0 * t);
      return hi2;
    };
    const AugmentedField fd1 = diff(value(t1), value(-t1), t1);
    const AugmentedField fd2 = diff(value(t2), value(-t2), t2);
    const AugmentedField formula = solution_map_derivative(geo, eps, pot, u, v, Lambda);
    AugmentedField e1{fd1.field - formula.field, fd1.scalar - formula.scalar};
    AugmentedField e2{fd2.field - formula.field, fd2.scalar - formula.scalar};
    AugmentedField ex{(fd2.field * 4.0 - fd1.field) * (1.0 / 3.0) - formula.field,
                      (4.0 * fd2.scalar - fd1.scalar) / 3.0 - formula.scalar};
    const double scale = std::max({aug_norm(formula), aug_norm(fd2), 1e-10});
    record(3, aug_norm(e1) / scale, aug_norm(e2) / scale, aug_norm(ex) / scale);
  }

  {  // dF, parameter block at fixed (u, lambda)
    const auto value = [&](std::size_t q) {
      return solution_map(*disp[q], eps + ts[q] * eta, pot, u, lambda);
    };
    const auto diff = [&](AugmentedField hi2, const AugmentedField& lo2, double t) {
      hi2.field -= lo2.field;
      hi2.field *= 1.0 / (2.0 * t);
      hi2.scalar = (hi2.scalar - lo2.scalar) / (2.0 * t);
      return hi2;
    };
    const AugmentedField fd1 = diff(value(0), value(1), t1);
    const AugmentedField fd2 = diff(value(2), value(3), t2);
    const AugmentedField formula =
        solution_map_parameter_derivative(geo, eps, pot, u, lambda, eta, dir);
    AugmentedField e1{fd1.field - formula.field, fd1.scalar - formula.scalar};
    AugmentedField e2{fd2.field - formula.field, fd2.scalar - formula.scalar};
    AugmentedField ex{(fd2.field * 4.0 - fd1.field) * (1.0 / 3.0) - formula.field,
                      (4.0 * fd2.scalar - fd1.scalar) / 3.0 - formula.scalar};
    const double scale = std::max({aug_norm(formula), aug_norm(fd2), 1e-10});
    record(4, aug_norm(e1) / scale, aug_norm(e2) / scale, aug_norm(ex) / scale);
  }

  return out;
}

}  // namespace detail

inline RunRecord run_check_calculus(const RunConfig& cfg, int threads = 1) {
  detail::require_torus(cfg);
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);

  const int S = ex.samples;
  std::vector<detail::CalculusSample> samples(static_cast<std::size_t>(S));
  detail::parallel_for(S, threads, [&](int i) {
    samples[static_cast<std::size_t>(i)] = detail::calculus_sample(
        cfg.manifold, pot, detail::mix_seed(ex.seed, static_cast<std::uint64_t>(i)));
  });

  static const std::array<const char*, 5> names{"dE", "dA", "dB", "dF_state", "dF_parameter"};
  json formulas = json::object();
  for (std::size_t slot = 0; slot < names.size(); ++slot) {
    double worst = 0.0;
    std::vector<double> orders;
    for (const auto& s : samples) {
      worst = std::max(worst, s.error[slot]);
      if (s.order_valid[slot]) orders.push_back(s.order[slot]);
    }
    std::sort(orders.begin(), orders.end());
    const double median_order =
        orders.empty() ? 2.0 : orders[orders.size() / 2];
    json f;
    f["worst_relative_error"] = worst;
    f["median_order"] = median_order;
    f["order_samples"] = orders.size();
    formulas[names[slot]] = std::move(f);

    detail::add_check(rec, std::string(names[slot]) + "_error", worst <= 1e-6,
                      "worst relative error " + detail::fmt(worst));
    const bool order_ok = orders.empty() || (median_order >= 1.6 && median_order <= 2.6);
    detail::add_check(rec, std::string(names[slot]) + "_order", order_ok,
                      orders.empty() ? "all samples below the roundoff floor"
                                     : "median order " + detail::fmt(median_order));
  }
  rec.doc["results"]["formulas"] = std::move(formulas);
  rec.doc["results"]["samples"] = S;
  rec.doc["results"]["steps"] = json::array({1e-3, 5e-4});
  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// probe-generic
// ---------------------------------------------------------------------------

namespace detail {

/// Random SPD metric in the box G = I + delta * (symmetric, entries in
/// [-1, 1]); resamples until the smallest eigenvalue clears 0.05.
inline Eigen::MatrixXd sample_metric(Rng& rng, int d, double delta) {
  for (;;) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Identity(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        const double t = delta * rng.uniform(-1.0, 1.0);
        G(a, b) += t;
        if (b != a) G(b, a) += t;
      }
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff() > 0.05)
      return G;
  }
}

inline double smallest_positive_eigenvalue(const ManifoldSpec& spec) {
  for (const SpectralLine& line : lattice_spectrum(spec, 4))
    if (line.eigenvalue > 1e-12) return line.eigenvalue;
  throw std::runtime_error("no positive Laplace eigenvalue found");
}

}  // namespace detail

inline RunRecord run_probe_generic(const RunConfig& cfg, int threads = 1) {
  detail::require_torus(cfg);
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);
  const int d = cfg.manifold.dim;

  // Part (a): random (eps, G) density scan on the constant branch.
  struct DensityRow {
    double eps = 0.0;
    double ratio = 0.0;
    std::string classification;
    bool flagged = false;
  };
  const int S = ex.samples;
  std::vector<DensityRow> density(static_cast<std::size_t>(S));
  detail::parallel_for(S, threads, [&](int i) {
    Rng rng(detail::mix_seed(ex.seed, static_cast<std::uint64_t>(i)));
    const Eigen::MatrixXd G = detail::sample_metric(rng, d, ex.delta);
    const double eps = rng.uniform(0.05, 0.35);
    Geometry geo(ManifoldSpec::torus(d, cfg.manifold.resolution, G));
    const auto [u, lambda] = constant_solution(geo, pot, ex.nu);
    (void)lambda;
    DegeneracyReport rep = min_singular(geo, eps, pot, u, 0);
    DensityRow row;
    row.eps = eps;
    row.ratio = rep.sigma_min / rep.sigma_max;
    row.classification = to_string(rep.classification);
    if (rep.classification != DegeneracyClass::nondegenerate) {
      // Re-examine near-misses at a tighter tolerance before flagging.
      const DegeneracyReport again = min_singular(geo, eps, pot, u, 0, kDegenerateTol / 10.0);
      row.flagged = again.classification == DegeneracyClass::degenerate;
    }
    density[static_cast<std::size_t>(i)] = row;
  });
  int flagged = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  json density_json = json::array();
  for (const auto& row : density) {
    flagged += row.flagged ? 1 : 0;
    worst_ratio = std::min(worst_ratio, row.ratio);
    density_json.push_back(json{{"eps", row.eps},
                                {"sigma_ratio", row.ratio},
                                {"classification", row.classification},
                                {"flagged", row.flagged}});
  }
  rec.doc["results"]["density"] =
      json{{"samples", S}, {"degenerate_count", flagged}, {"worst_sigma_ratio", worst_ratio},
           {"rows", std::move(density_json)}};
  detail::add_check(rec, "density_no_degenerate", flagged == 0,
                    std::to_string(flagged) + " of " + std::to_string(S) +
                        " random samples degenerate; smallest sigma ratio " +
                        detail::fmt(worst_ratio));

  // Part (b): constructed degenerate pairs, with openness at eps* +- 1e-3.
  const int SB = std::min(S, 25);
  struct OpennessRow {
    double eps_star = 0.0;
    std::string at_star, below, above;
    bool ok = false;
  };
  std::vector<OpennessRow> openness(static_cast<std::size_t>(SB));
  detail::parallel_for(SB, threads, [&](int i) {
    Rng rng(detail::mix_seed(ex.seed ^ 0x6f70656eull, static_cast<std::uint64_t>(i)));
    const Eigen::MatrixXd G = detail::sample_metric(rng, d, ex.delta);
    const ManifoldSpec spec = ManifoldSpec::torus(d, cfg.manifold.resolution, G);
    Geometry geo(spec);
    const double c = ex.nu / geo.volume();
    const double w2 = pot.d2W(c);
    OpennessRow row;
    if (w2 >= 0.0) {
      row.at_star = "skipped: W'' at the mean is nonnegative";
      openness[static_cast<std::size_t>(i)] = row;
      return;
    }
    const double theta1 = detail::smallest_positive_eigenvalue(spec);
    row.eps_star = std::sqrt(-w2 / theta1);
    const auto [u, lambda] = constant_solution(geo, pot, ex.nu);
    (void)lambda;
    const auto classify = [&](double e) {
      return min_singular(geo, e, pot, u, 0).classification;
    };
    const DegeneracyClass at = classify(row.eps_star);
    const DegeneracyClass lo = classify(row.eps_star - 1e-3);
    const DegeneracyClass hi = classify(row.eps_star + 1e-3);
    row.at_star = to_string(at);
    row.below = to_string(lo);
    row.above = to_string(hi);
    row.ok = at == DegeneracyClass::degenerate && lo == DegeneracyClass::nondegenerate &&
             hi == DegeneracyClass::nondegenerate;
    openness[static_cast<std::size_t>(i)] = row;
  });
  int openness_ok = 0;
  json openness_json = json::array();
  for (const auto& row : openness) {
    openness_ok += row.ok ? 1 : 0;
    openness_json.push_back(json{{"eps_star", row.eps_star},
                                 {"at_star", row.at_star},
                                 {"below", row.below},
                                 {"above", row.above},
                                 {"ok", row.ok}});
  }
  rec.doc["results"]["openness"] =
      json{{"samples", SB}, {"ok_count", openness_ok}, {"rows", std::move(openness_json)}};
  detail::add_check(rec, "openness_all_samples", openness_ok == SB,
                    std::to_string(openness_ok) + " of " + std::to_string(SB) +
                        " constructed pairs verified");

  // Part (c): symmetry-induced stripe degeneracy lifted by a conformal
  // perturbation (flat 2D tori only; the conformal class needs d = 2).
  if (d == 2 && cfg.manifold.metric.phi.empty()) {
    const ManifoldSpec flat = cfg.manifold;
    Geometry geo(flat);
    const double theta1 = detail::smallest_positive_eigenvalue(flat);
    const double w2 = pot.d2W(0.0);
    json sym;
    if (w2 < 0.0) {
      const double eps1 = std::sqrt(-w2 / theta1);
      const double eps_st = ex.stripe_eps_factor * eps1;
      const Field u0 = cosine_field(geo.grid(), {{{1, 0, 0}, 0.5}});
      const Solution stripe =
          newton_solve(geo, eps_st, pot, 0.0, u0, 0.0, cfg.solver.newton());
      const DegeneracyReport flat_rep = min_singular(geo, eps_st, pot, stripe.u, 0);
      const double flat_ratio = flat_rep.sigma_min / flat_rep.sigma_max;

      ManifoldSpec bent = flat;
      bent.metric.phi = {{{1, 0, 0}, ex.conformal_amplitude},
                         {{2, 0, 0}, ex.conformal_amplitude}};
      Geometry geo_b(bent);
      const Solution moved =
          newton_solve(geo_b, eps_st, pot, 0.0, stripe.u, stripe.lambda, cfg.solver.newton());
      const DegeneracyReport bent_rep = min_singular(geo_b, eps_st, pot, moved.u, 0);
      const double bent_ratio = bent_rep.sigma_min / bent_rep.sigma_max;

      sym["eps"] = eps_st;
      sym["nu"] = 0.0;
      sym["note"] = "nu = 0 stripe; outside the nondegeneracy theorem hypothesis";
      sym["flat"] = json{{"lambda", stripe.lambda},
                         {"residual", stripe.residual},
                         {"sigma_ratio", flat_ratio},
                         {"kernel_dimension", flat_rep.kernel_dimension}};
      sym["perturbed"] = json{{"lambda", moved.lambda},
                              {"residual", moved.residual},
                              {"sigma_ratio", bent_ratio},
                              {"classification", to_string(bent_rep.classification)}};
      detail::add_check(rec, "symmetry_flat_degenerate", flat_ratio <= 1e-6,
                        "flat stripe sigma ratio " + detail::fmt(flat_ratio));
      detail::add_check(rec, "symmetry_perturbation_lifts",
                        bent_ratio >= 10.0 * kDegenerateTol &&
                            bent_rep.classification == DegeneracyClass::nondegenerate,
                        "perturbed sigma ratio " + detail::fmt(bent_ratio));
    } else {
      sym["skipped"] = "W''(0) is nonnegative; no stripe branch exists";
    }
    rec.doc["results"]["symmetry"] = std::move(sym);
  } else {
    rec.doc["results"]["symmetry"] =
        json{{"skipped", "symmetry probe needs a flat 2D torus"}};
  }

  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// census
// ---------------------------------------------------------------------------

inline RunRecord run_census(const RunConfig& cfg, int threads = 1) {
  detail::require_torus(cfg);
  Geometry geo(cfg.manifold);
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);

  struct Start {
    bool ok = false;
    std::string error;
    Solution sol;
    double energy = 0.0;
  };
  std::vector<Start> starts(static_cast<std::size_t>(ex.starts));
  detail::parallel_for(ex.starts, threads, [&](int i) {
    Rng rng(detail::mix_seed(ex.seed, static_cast<std::uint64_t>(i)));
    Start st;
    try {
      Field u0 = rng.smooth_field(geo.grid(), 0.6, 1.8);
      u0 += Field::constant(geo.grid(), (ex.nu - geo.integrate(u0)) / geo.volume());
      u0 = gradient_flow(geo, ex.eps, pot, ex.nu, u0, ex.flow_steps, ex.flow_dt);
      st.sol = newton_solve(geo, ex.eps, pot, ex.nu, u0, 0.0, cfg.solver.newton());
      st.energy = lagrangian_value(geo, ex.eps, pot, st.sol.u, st.sol.lambda, ex.nu);
      st.ok = true;
    } catch (const std::exception& e) {
      st.error = e.what();
    }
    starts[static_cast<std::size_t>(i)] = st;
  });

  struct Distinct {
    Solution sol;
    double energy = 0.0;
    int hits = 0;
  };
  std::vector<Distinct> distinct;
  int failures = 0;
  for (const auto& st : starts) {
    if (!st.ok) {
      ++failures;
      continue;
    }
    bool merged = false;
    for (auto& rep : distinct) {
      if (std::abs(st.sol.lambda - rep.sol.lambda) > 1e-6) continue;
      if (std::abs(st.energy - rep.energy) > 1e-6) continue;
      if (detail::aligned_distance(st.sol.u, rep.sol.u) > 1e-6) continue;
      ++rep.hits;
      merged = true;
      break;
    }
    if (!merged) distinct.push_back({st.sol, st.energy, 1});
  }

  const bool flat_identity =
      cfg.manifold.metric.phi.empty() &&
      cfg.manifold.metric.G.isIdentity(1e-15);

  json distinct_json = json::array();
  int stripe_counter = 0;
  for (std::size_t j = 0; j < distinct.size(); ++j) {
    const Distinct& rep = distinct[j];
    json entry = detail::solution_json(geo, pot, rep.sol, true);
    entry["hits"] = rep.hits;
    const DegeneracyReport deg = min_singular(geo, ex.eps, pot, rep.sol.u);
    entry["degeneracy"] = detail::degeneracy_json(deg);

    Field fluct = rep.sol.u;
    fluct.set_mean(0.0);
    std::string tag;
    if (fluct.coefficient_norm() <= 1e-10 * (1.0 + std::abs(rep.sol.u.mean()))) {
      tag = "constant";
    } else if (auto axis = detail::stripe_axis(rep.sol.u)) {
      tag = "stripe";
      entry["stripe_axis"] = *axis;
      if (flat_identity) {
        // Cross-check against the independent 1D collocation oracle.
        try {
          const Profile1D p = solve_periodic(pot, ex.eps, ex.nu, 1.0, ex.mesh);
          const auto coef = profile_coefficients(p, geo.grid().kmax());
          Field v1d(geo.grid());
          for (int m = 0; m < static_cast<int>(coef.size()); ++m) {
            std::array<int, 3> k{0, 0, 0};
            k[*axis] = m;
            v1d.set_coefficient(k, coef[static_cast<std::size_t>(m)]);
            if (m > 0) {
              k[*axis] = -m;
              v1d.set_coefficient(k, std::conj(coef[static_cast<std::size_t>(m)]));
            }
          }
          const double lambda_diff = std::abs(p.lambda - rep.sol.lambda);
          const double profile_diff = detail::aligned_distance(rep.sol.u, v1d);
          entry["oracle"] = json{{"lambda_difference", lambda_diff},
                                 {"profile_distance", profile_diff}};
          detail::add_check(rec, "stripe_" + std::to_string(stripe_counter) + "_oracle_match",
                            lambda_diff <= 1e-6 && profile_diff <= 1e-6,
                            "lambda diff " + detail::fmt(lambda_diff) + ", profile diff " +
                                detail::fmt(profile_diff));
        } catch (const NotFound& e) {
          entry["oracle"] = json{{"error", e.what()}};
          detail::add_check(rec, "stripe_" + std::to_string(stripe_counter) + "_oracle_match",
                            false, std::string("oracle found no profile: ") + e.what());
        }
        ++stripe_counter;
      }
    } else {
      tag = "genuinely_2d";
    }
    entry["tag"] = tag;
    distinct_json.push_back(std::move(entry));
  }

  rec.doc["results"]["starts"] = ex.starts;
  rec.doc["results"]["failed_starts"] = failures;
  rec.doc["results"]["distinct_count"] = distinct.size();
  rec.doc["results"]["distinct"] = std::move(distinct_json);
  rec.doc["results"]["morse_lower_bound"] = morse_lower_bound(cfg.manifold);

  detail::add_check(rec, "any_solution_found", !distinct.empty(),
                    std::to_string(distinct.size()) + " distinct solutions from " +
                        std::to_string(ex.starts) + " starts (" +
                        std::to_string(failures) + " failed)");
  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// oracle1d
// ---------------------------------------------------------------------------

inline RunRecord run_oracle1d(const RunConfig& cfg, int /*threads*/ = 1) {
  const Potential pot = cfg.potential.build();
  const ExperimentConfig& ex = cfg.experiment;
  RunRecord rec = detail::make_record(cfg);

  const double eps1 = first_bifurcation_eps(pot, ex.nu, ex.period);
  if (std::isfinite(eps1)) rec.doc["results"]["first_bifurcation_eps"] = eps1;
  try {
    const Profile1D p = solve_periodic(pot, ex.eps, ex.nu, ex.period, ex.mesh);
    rec.doc["results"]["found"] = true;
    rec.doc["results"]["lambda"] = p.lambda;
    rec.doc["results"]["residual"] = p.residual;
    rec.doc["results"]["newton_iterations"] = p.newton_iterations;
    json values = json::array();
    for (double v : p.values) values.push_back(v);
    rec.doc["results"]["values"] = std::move(values);
    rec.doc["results"]["mesh"] = ex.mesh;
    rec.doc["results"]["period"] = ex.period;
    detail::add_check(rec, "profile_residual", p.residual <= 1e-10,
                      "collocation residual " + detail::fmt(p.residual));
  } catch (const NotFound& e) {
    rec.doc["results"]["found"] = false;
    rec.doc["results"]["reason"] = e.what();
  }
  detail::seal_checks(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline RunRecord run_experiment(const RunConfig& cfg, int threads = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  const std::string& kind = cfg.experiment.kind;
  if (kind == "solve")
    rec = run_solve(cfg, threads);
  else if (kind == "sweep")
    rec = run_sweep(cfg, threads);
  else if (kind == "degenerate-eps")
    rec = run_degenerate_eps(cfg, threads);
  else if (kind == "check-calculus")
    rec = run_check_calculus(cfg, threads);
  else if (kind == "probe-generic")
    rec = run_probe_generic(cfg, threads);
  else if (kind == "census")
    rec = run_census(cfg, threads);
  else if (kind == "oracle1d")
    rec = run_oracle1d(cfg, threads);
  else
    throw std::runtime_error("unknown experiment kind '" + kind + "'");
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace aclab
