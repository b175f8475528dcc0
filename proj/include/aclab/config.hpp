// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aclab/manifold.hpp"
#include "aclab/potential.hpp"
#include "aclab/solver.hpp"

namespace aclab {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

struct SolverConfig {
  double tol = 1e-10;
  int max_iter = 50;
  int max_backtracks = 20;
  int dense_limit = 2600;
  int flow_steps = 0;
  double flow_dt = 0.5;
  bool detect_degenerate = true;

  NewtonOptions newton() const {
    NewtonOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.max_backtracks = max_backtracks;
    o.dense_limit = dense_limit;
    return o;
  }
};

struct PotentialConfig {
  std::string kind = "double_well";
  std::vector<double> coefficients;      // polynomial only, low-to-high
  std::array<double, 2> range{-10.0, 10.0};  // growth validation window

  Potential build() const {
    if (kind == "double_well") return double_well();
    return polynomial_potential(coefficients, range[0], range[1]);
  }
};

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  bool has_seed = false;

  double eps = 0.1;
  double nu = 0.0;
  double lambda0 = 0.0;
  std::string init = "constant";  // solve: constant | cosine | random
  double init_amplitude = 0.1;
  std::array<int, 3> init_wavevector{1, 0, 0};

  double eps_min = 0.1, eps_max = 0.2, eps_step = 1e-3;  // sweep
  std::string branch = "constant";
  int j_max = 6;

  int samples = 50;                   // check-calculus, probe-generic
  double delta = 0.2;                 // probe-generic metric box half-width
  double conformal_amplitude = 0.05;  // probe-generic symmetry breaking
  double stripe_eps_factor = 0.9;     // probe-generic stripe eps / eps_1

  int starts = 16;        // census multistart count
  int flow_steps = 40;    // census flow initialization
  double flow_dt = 1.0;

  double period = 1.0;  // oracle1d
  int mesh = 256;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"doc", "table"};
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  ManifoldSpec manifold = ManifoldSpec::flat_torus(2, 16);
  PotentialConfig potential;
  SolverConfig solver;
  ExperimentConfig experiment;
  OutputConfig output;

  /// Resolved-configuration snapshot embedded in every result document
  /// (defaults filled in; output block excluded so documents do not depend
  /// on where they are written).
  json snapshot() const;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at '" + path + "': " + what);
}

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok) config_fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(path + "." + key, e.what());
  }
}

template <typename T>
T get_required(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) config_fail(path + "." + key, "required key missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(path + "." + key, e.what());
  }
}

inline ManifoldSpec parse_manifold(const json& m) {
  check_keys(m, "manifold", {"kind", "d", "N", "G", "phi", "R", "L"});
  const std::string kind = get_or<std::string>(m, "manifold", "kind", "torus");
  if (kind == "sphere") {
    for (const char* k : {"d", "N", "G", "phi"})
      if (m.contains(k)) config_fail(std::string("manifold.") + k, "not a sphere key");
    try {
      return ManifoldSpec::sphere(get_or<double>(m, "manifold", "R", 1.0),
                                  get_or<int>(m, "manifold", "L", 16));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      config_fail("manifold", e.what());
    }
  }
  if (kind != "torus") config_fail("manifold.kind", "expected 'torus' or 'sphere'");
  for (const char* k : {"R", "L"})
    if (m.contains(k)) config_fail(std::string("manifold.") + k, "not a torus key");
  const int d = get_or<int>(m, "manifold", "d", 2);
  const int N = get_or<int>(m, "manifold", "N", 16);
  if (d != 2 && d != 3) config_fail("manifold.d", "torus dimension must be 2 or 3");
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(d, d);
  if (m.contains("G")) {
    const auto flat = get_required<std::vector<double>>(m, "manifold", "G");
    if (static_cast<int>(flat.size()) != d * d)
      config_fail("manifold.G", "expected " + std::to_string(d * d) + " row-major entries");
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) G(i, j) = flat[static_cast<std::size_t>(i * d + j)];
  }
  std::vector<ConformalMode> phi;
  if (m.contains("phi")) {
    const json& list = m.at("phi");
    if (!list.is_array()) config_fail("manifold.phi", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "manifold.phi[" + std::to_string(i) + "]";
      check_keys(list[i], path, {"wavevector", "amplitude"});
      const auto kv = get_required<std::vector<int>>(list[i], path, "wavevector");
      if (static_cast<int>(kv.size()) != d)
        config_fail(path + ".wavevector", "expected " + std::to_string(d) + " entries");
      ConformalMode mode;
      mode.wavevector = {0, 0, 0};
      for (int a = 0; a < d; ++a) mode.wavevector[static_cast<std::size_t>(a)] = kv[static_cast<std::size_t>(a)];
      mode.amplitude = get_required<double>(list[i], path, "amplitude");
      phi.push_back(mode);
    }
  }
  try {
    return ManifoldSpec::torus(d, N, G, phi);
  } catch (const std::exception& e) {
    config_fail("manifold", e.what());
  }
}

inline PotentialConfig parse_potential(const json& p) {
  check_keys(p, "potential", {"kind", "coefficients", "range"});
  PotentialConfig out;
  out.kind = get_or<std::string>(p, "potential", "kind", "double_well");
  if (out.kind == "polynomial") {
    out.coefficients = get_required<std::vector<double>>(p, "potential", "coefficients");
  } else if (out.kind != "double_well") {
    config_fail("potential.kind", "expected 'double_well' or 'polynomial'");
  } else if (p.contains("coefficients")) {
    config_fail("potential.coefficients", "only valid for kind 'polynomial'");
  }
  if (p.contains("range")) {
    const auto r = get_required<std::vector<double>>(p, "potential", "range");
    if (r.size() != 2 || !(r[0] < r[1]))
      config_fail("potential.range", "expected [lo, hi] with lo < hi");
    out.range = {r[0], r[1]};
  }
  return out;
}

inline SolverConfig parse_solver(const json& s) {
  check_keys(s, "solver",
             {"tol", "max_iter", "max_backtracks", "dense_limit", "flow_steps", "flow_dt",
              "detect_degenerate"});
  SolverConfig out;
  out.tol = get_or<double>(s, "solver", "tol", out.tol);
  out.max_iter = get_or<int>(s, "solver", "max_iter", out.max_iter);
  out.max_backtracks = get_or<int>(s, "solver", "max_backtracks", out.max_backtracks);
  out.dense_limit = get_or<int>(s, "solver", "dense_limit", out.dense_limit);
  out.flow_steps = get_or<int>(s, "solver", "flow_steps", out.flow_steps);
  out.flow_dt = get_or<double>(s, "solver", "flow_dt", out.flow_dt);
  out.detect_degenerate = get_or<bool>(s, "solver", "detect_degenerate", out.detect_degenerate);
  if (!(out.tol > 0)) config_fail("solver.tol", "must be positive");
  if (out.max_iter < 1) config_fail("solver.max_iter", "must be at least 1");
  return out;
}

inline ExperimentConfig parse_experiment(const json& e) {
  check_keys(e, "experiment",
             {"kind", "seed", "eps", "nu", "lambda0", "init", "init_amplitude",
              "init_wavevector", "eps_min", "eps_max", "eps_step", "branch", "j_max", "samples",
              "delta", "conformal_amplitude", "stripe_eps_factor", "starts", "flow_steps",
              "flow_dt", "period", "mesh"});
  ExperimentConfig out;
  out.kind = get_required<std::string>(e, "experiment", "kind");
  static const std::set<std::string> kinds{"solve",        "sweep",         "degenerate-eps",
                                           "check-calculus", "probe-generic", "census",
                                           "oracle1d"};
  if (!kinds.count(out.kind)) config_fail("experiment.kind", "unknown experiment '" + out.kind + "'");
  if (e.contains("seed")) {
    out.seed = get_required<std::uint64_t>(e, "experiment", "seed");
    out.has_seed = true;
  }
  out.eps = get_or<double>(e, "experiment", "eps", out.eps);
  out.nu = get_or<double>(e, "experiment", "nu", out.nu);
  out.lambda0 = get_or<double>(e, "experiment", "lambda0", out.lambda0);
  out.init = get_or<std::string>(e, "experiment", "init", out.init);
  if (out.init != "constant" && out.init != "cosine" && out.init != "random")
    config_fail("experiment.init", "expected 'constant', 'cosine' or 'random'");
  out.init_amplitude = get_or<double>(e, "experiment", "init_amplitude", out.init_amplitude);
  if (e.contains("init_wavevector")) {
    const auto kv = get_required<std::vector<int>>(e, "experiment", "init_wavevector");
    if (kv.size() < 1 || kv.size() > 3)
      config_fail("experiment.init_wavevector", "expected 1-3 entries");
    out.init_wavevector = {0, 0, 0};
    for (std::size_t a = 0; a < kv.size(); ++a) out.init_wavevector[a] = kv[a];
  }
  out.eps_min = get_or<double>(e, "experiment", "eps_min", out.eps_min);
  out.eps_max = get_or<double>(e, "experiment", "eps_max", out.eps_max);
  out.eps_step = get_or<double>(e, "experiment", "eps_step", out.eps_step);
  out.branch = get_or<std::string>(e, "experiment", "branch", out.branch);
  if (out.branch != "constant" && out.branch != "continued")
    config_fail("experiment.branch", "expected 'constant' or 'continued'");
  out.j_max = get_or<int>(e, "experiment", "j_max", out.j_max);
  out.samples = get_or<int>(e, "experiment", "samples", out.samples);
  out.delta = get_or<double>(e, "experiment", "delta", out.delta);
  out.conformal_amplitude =
      get_or<double>(e, "experiment", "conformal_amplitude", out.conformal_amplitude);
  out.stripe_eps_factor =
      get_or<double>(e, "experiment", "stripe_eps_factor", out.stripe_eps_factor);
  out.starts = get_or<int>(e, "experiment", "starts", out.starts);
  out.flow_steps = get_or<int>(e, "experiment", "flow_steps", out.flow_steps);
  out.flow_dt = get_or<double>(e, "experiment", "flow_dt", out.flow_dt);
  out.period = get_or<double>(e, "experiment", "period", out.period);
  out.mesh = get_or<int>(e, "experiment", "mesh", out.mesh);
  return out;
}

inline OutputConfig parse_output(const json& o) {
  check_keys(o, "output", {"directory", "formats"});
  OutputConfig out;
  out.directory = get_or<std::string>(o, "output", "directory", out.directory);
  if (o.contains("formats")) {
    out.formats = get_required<std::vector<std::string>>(o, "output", "formats");
    for (const auto& f : out.formats)
      if (f != "table" && f != "doc" && f != "plots")
        config_fail("output.formats", "unknown format '" + f + "'");
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  detail::check_keys(root, "",
                     {"schema_version", "manifold", "potential", "solver", "experiment",
                      "output"});
  RunConfig cfg;
  const int version = detail::get_required<int>(root, "", "schema_version");
  if (version != kSchemaVersion)
    detail::config_fail("schema_version", "expected " + std::to_string(kSchemaVersion) +
                                              ", got " + std::to_string(version));
  if (root.contains("manifold")) cfg.manifold = detail::parse_manifold(root.at("manifold"));
  if (root.contains("potential")) cfg.potential = detail::parse_potential(root.at("potential"));
  if (root.contains("solver")) cfg.solver = detail::parse_solver(root.at("solver"));
  cfg.experiment = detail::parse_experiment(
      root.contains("experiment") ? root.at("experiment")
                                  : throw ConfigError("config error at 'experiment': required block missing"));
  if (root.contains("output")) cfg.output = detail::parse_output(root.at("output"));
  return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline json RunConfig::snapshot() const {
  json m;
  if (manifold.kind == ManifoldKind::sphere) {
    m["kind"] = "sphere";
    m["R"] = manifold.metric.radius;
    m["L"] = manifold.max_degree;
  } else {
    m["kind"] = "torus";
    m["d"] = manifold.dim;
    m["N"] = manifold.resolution;
    std::vector<double> flat;
    for (int i = 0; i < manifold.dim; ++i)
      for (int j = 0; j < manifold.dim; ++j) flat.push_back(manifold.metric.G(i, j));
    m["G"] = flat;
    json modes = json::array();
    for (const auto& mode : manifold.metric.phi) {
      json one;
      one["amplitude"] = mode.amplitude;
      one["wavevector"] = std::vector<int>(mode.wavevector.begin(),
                                           mode.wavevector.begin() + manifold.dim);
      modes.push_back(one);
    }
    m["phi"] = modes;
  }

  json p;
  p["kind"] = potential.kind;
  if (potential.kind == "polynomial") p["coefficients"] = potential.coefficients;
  p["range"] = std::vector<double>{potential.range[0], potential.range[1]};

  json s;
  s["tol"] = solver.tol;
  s["max_iter"] = solver.max_iter;
  s["max_backtracks"] = solver.max_backtracks;
  s["dense_limit"] = solver.dense_limit;
  s["flow_steps"] = solver.flow_steps;
  s["flow_dt"] = solver.flow_dt;
  s["detect_degenerate"] = solver.detect_degenerate;

  json e;
  e["kind"] = experiment.kind;
  if (experiment.has_seed) e["seed"] = experiment.seed;
  if (experiment.kind == "solve") {
    e["eps"] = experiment.eps;
    e["nu"] = experiment.nu;
    e["lambda0"] = experiment.lambda0;
    e["init"] = experiment.init;
    e["init_amplitude"] = experiment.init_amplitude;
    e["init_wavevector"] = std::vector<int>(experiment.init_wavevector.begin(),
                                            experiment.init_wavevector.begin() + manifold.dim);
  } else if (experiment.kind == "sweep") {
    e["eps_min"] = experiment.eps_min;
    e["eps_max"] = experiment.eps_max;
    e["eps_step"] = experiment.eps_step;
    e["nu"] = experiment.nu;
    e["branch"] = experiment.branch;
    e["j_max"] = experiment.j_max;
  } else if (experiment.kind == "degenerate-eps") {
    e["nu"] = experiment.nu;
    e["j_max"] = experiment.j_max;
  } else if (experiment.kind == "check-calculus") {
    e["samples"] = experiment.samples;
  } else if (experiment.kind == "probe-generic") {
    e["samples"] = experiment.samples;
    e["delta"] = experiment.delta;
    e["nu"] = experiment.nu;
    e["conformal_amplitude"] = experiment.conformal_amplitude;
    e["stripe_eps_factor"] = experiment.stripe_eps_factor;
  } else if (experiment.kind == "census") {
    e["starts"] = experiment.starts;
    e["eps"] = experiment.eps;
    e["nu"] = experiment.nu;
    e["flow_steps"] = experiment.flow_steps;
    e["flow_dt"] = experiment.flow_dt;
  } else if (experiment.kind == "oracle1d") {
    e["eps"] = experiment.eps;
    e["nu"] = experiment.nu;
    e["period"] = experiment.period;
    e["mesh"] = experiment.mesh;
  }

  json root;
  root["schema_version"] = schema_version;
  root["manifold"] = m;
  root["potential"] = p;
  root["solver"] = s;
  root["experiment"] = e;
  return root;
}

}  // namespace aclab
