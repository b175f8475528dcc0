// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Laboratory layer: config parsing and snapshots, result-document skeleton,
// experiment runners, scheduling-independent determinism, and report emission
// with record round trips.

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unistd.h>

#include "aclab/report.hpp"

using namespace aclab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Fresh scratch directory, removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const char* tag) {
    path = std::filesystem::temp_directory_path() /
           (std::string("aclab-test-") + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config defaults", "[lab]") {
  RunConfig cfg = parse_config(R"({"schema_version":1,"experiment":{"kind":"solve","seed":1}})");
  CHECK(cfg.schema_version == 1);
  CHECK(cfg.manifold.kind == ManifoldKind::torus);
  CHECK(cfg.manifold.dim == 2);
  CHECK(cfg.manifold.resolution == 16);
  CHECK(cfg.manifold.metric.G.isIdentity(1e-15));
  CHECK(cfg.manifold.metric.phi.empty());
  CHECK(cfg.potential.kind == "double_well");
  CHECK(cfg.solver.tol == 1e-10);
  CHECK(cfg.solver.max_iter == 50);
  CHECK(cfg.experiment.kind == "solve");
  CHECK(cfg.experiment.has_seed);
  CHECK(cfg.experiment.seed == 1);
  CHECK(cfg.experiment.eps == 0.1);
  CHECK(cfg.experiment.nu == 0.0);
  CHECK(cfg.experiment.init == "constant");
  CHECK(cfg.output.directory == "out");
  REQUIRE(cfg.output.formats.size() == 2);
  CHECK(cfg.output.formats[0] == "doc");
  CHECK(cfg.output.formats[1] == "table");

  RunConfig noseed =
      parse_config(R"({"schema_version":1,"experiment":{"kind":"degenerate-eps"}})");
  CHECK_FALSE(noseed.experiment.has_seed);
}

TEST_CASE("config rejects malformed input", "[lab]") {
  // Not JSON at all.
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  // Schema version handling.
  CHECK_THROWS_AS(parse_config(R"({"experiment":{"kind":"solve"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":2,"experiment":{"kind":"solve"}})"),
                  ConfigError);
  // The experiment block and its kind are required.
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"experiment":{}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"experiment":{"kind":"fourier"}})"),
                  ConfigError);
  // Unknown keys are hard errors at every level.
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"experimnt":{"kind":"solve"}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"solver":{"tolx":1e-9},"experiment":{"kind":"solve"}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"manifold":{"bend":3},"experiment":{"kind":"solve"}})"),
      ConfigError);
  // Manifold validation.
  CHECK_THROWS_AS(
      parse_config(R"({"schema_version":1,"manifold":{"d":4},"experiment":{"kind":"solve"}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"manifold":{"kind":"klein"},"experiment":{"kind":"solve"}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"manifold":{"N":24},"experiment":{"kind":"solve"}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"manifold":{"kind":"sphere","N":16},"experiment":{"kind":"solve"}})"),
      ConfigError);
  // Solver and output validation.
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"solver":{"tol":-1.0},"experiment":{"kind":"solve"}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"schema_version":1,"experiment":{"kind":"solve"},"output":{"formats":["gif"]}})"),
      ConfigError);
}

TEST_CASE("config round trips through its snapshot", "[lab]") {
  const std::string text = R"({
    "schema_version": 1,
    "manifold": {"kind": "torus", "d": 2, "N": 16,
                 "G": [1.0, 0.25, 0.25, 4.0],
                 "phi": [{"wavevector": [1, 0], "amplitude": 0.2}]},
    "potential": {"kind": "polynomial", "coefficients": [0.25, 0.0, -0.5, 0.0, 0.25],
                  "range": [-8.0, 8.0]},
    "solver": {"tol": 1e-11, "max_iter": 30},
    "experiment": {"kind": "solve", "seed": 9, "eps": 0.12, "nu": 0.05,
                   "lambda0": 0.1, "init": "cosine", "init_amplitude": 0.3,
                   "init_wavevector": [1, 1]}
  })";
  RunConfig cfg = parse_config(text);
  CHECK(cfg.manifold.metric.G(0, 1) == 0.25);
  CHECK(cfg.manifold.metric.G(1, 1) == 4.0);
  REQUIRE(cfg.manifold.metric.phi.size() == 1);
  CHECK(cfg.manifold.metric.phi[0].amplitude == 0.2);
  CHECK(cfg.potential.kind == "polynomial");
  CHECK(cfg.experiment.init_wavevector[1] == 1);

  // The polynomial coincides with the built-in double well.
  Potential poly = cfg.potential.build();
  Potential dw = double_well();
  for (double t : {-1.2, -0.3, 0.0, 0.7, 1.4}) {
    CHECK(poly.W(t) == Catch::Approx(dw.W(t)).margin(1e-14));
    CHECK(poly.dW(t) == Catch::Approx(dw.dW(t)).margin(1e-14));
  }

  // Snapshot -> parse -> snapshot is the identity on the canonical subset.
  const json snap = cfg.snapshot();
  RunConfig cfg2 = parse_config(snap.dump());
  CHECK(cfg2.snapshot() == snap);
}

TEST_CASE("fingerprint helpers", "[lab]") {
  // FNV-1a reference vectors.
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(detail::hex16(0xaf63dc4c8601ec8cull) == "af63dc4c8601ec8c");
  CHECK(detail::hex16(0) == "0000000000000000");

  // Stream seeds are deterministic and distinct across work items.
  CHECK(detail::mix_seed(1, 0) == detail::mix_seed(1, 0));
  CHECK(detail::mix_seed(1, 0) != detail::mix_seed(1, 1));
  CHECK(detail::mix_seed(1, 0) != detail::mix_seed(2, 0));

  // parallel_for covers every index exactly once and rethrows worker errors.
  std::vector<int> hits(64, 0);
  detail::parallel_for(64, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(detail::parallel_for(8, 4,
                                       [&](int i) {
                                         if (i == 3) throw std::runtime_error("boom");
                                       }),
                  std::runtime_error);
}

TEST_CASE("record skeleton and provenance hash", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "degenerate-eps";
  cfg.experiment.nu = 0.0;
  RunRecord rec = detail::make_record(cfg);

  CHECK(rec.doc["schema_version"] == kSchemaVersion);
  CHECK(rec.doc["kind"] == "degenerate-eps");
  CHECK(rec.doc["tool"]["name"].is_string());
  CHECK(rec.doc["results"].is_object());
  CHECK_FALSE(rec.doc.contains("timing"));
  CHECK_FALSE(rec.doc.contains("wall_seconds"));

  const std::string h = rec.doc["input_hash"].get<std::string>();
  REQUIRE(h.size() == 16);
  for (char c : h) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  CHECK(h == detail::hex16(fnv1a(cfg.snapshot().dump())));

  // nu = 0 output carries the symmetric-case caveat; nu != 0 does not.
  REQUIRE(rec.doc["notes"].is_array());
  CHECK(rec.doc["notes"].size() == 1);
  cfg.experiment.nu = 0.1;
  CHECK(detail::make_record(cfg).doc["notes"].empty());
}

TEST_CASE("solve runner produces a verified solution document", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "solve";
  cfg.experiment.seed = 5;
  cfg.experiment.has_seed = true;
  cfg.experiment.eps = 0.1;
  cfg.experiment.nu = 0.1;
  cfg.experiment.init = "cosine";
  cfg.experiment.init_amplitude = 0.6;

  RunRecord rec = run_experiment(cfg, 1);
  CHECK_FALSE(rec.any_failure());
  CHECK_FALSE(rec.checks.empty());
  CHECK(rec.wall_seconds > 0.0);

  const json& sol = rec.doc["results"]["solution"];
  CHECK(sol["residual"].get<double>() <= 1e-10);
  CHECK(std::abs(sol["mass"].get<double>() - 0.1) <= 1e-10);
  CHECK(sol["contraction_ok"].get<bool>());
  // The cosine seed converges to a stripe below eps_1, so the linearization
  // carries the translation zero mode: degenerate with sigma_min at the
  // rounding floor (possibly exactly zero).
  const json& deg = rec.doc["results"]["degeneracy"];
  CHECK(deg["classification"].get<std::string>() == "degenerate");
  CHECK(deg["sigma_min"].get<double>() >= 0.0);
  CHECK(deg["sigma_max"].get<double>() > 0.0);
  CHECK(deg["kernel_dimension"].get<int>() >= 1);

  // The sealed check list mirrors the in-memory one.
  REQUIRE(rec.doc["checks"].is_array());
  CHECK(rec.doc["checks"].size() == rec.checks.size());
}

TEST_CASE("sweep runner on a quiet range reports no dips", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "sweep";
  cfg.experiment.seed = 2;
  cfg.experiment.has_seed = true;
  cfg.experiment.nu = 0.1;
  cfg.experiment.eps_min = 0.18;  // above the largest predicted eps ~0.1567
  cfg.experiment.eps_max = 0.19;
  cfg.experiment.eps_step = 0.002;
  cfg.experiment.branch = "constant";

  RunRecord rec = run_experiment(cfg, 2);
  CHECK_FALSE(rec.any_failure());
  const json& res = rec.doc["results"];
  REQUIRE(res["rows"].is_array());
  CHECK(res["rows"].size() == 6);
  for (const json& r : res["rows"]) {
    CHECK(r["residual"].get<double>() <= 1e-10);
    CHECK(r["classification"] == "nondegenerate");
  }
  CHECK(res["dips"].empty());
  CHECK(res["predictions"].size() >= 1);  // they all sit below the window
}

TEST_CASE("census collapses to the constant at large eps", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "census";
  cfg.experiment.seed = 1;
  cfg.experiment.has_seed = true;
  cfg.experiment.eps = 1.0;
  cfg.experiment.nu = 0.1;
  cfg.experiment.starts = 6;

  RunRecord rec = run_experiment(cfg, 2);
  CHECK_FALSE(rec.any_failure());
  const json& res = rec.doc["results"];
  CHECK(res["failed_starts"].get<int>() == 0);
  REQUIRE(res["distinct_count"].get<int>() == 1);
  const json& only = res["distinct"][0];
  CHECK(only["tag"] == "constant");
  CHECK(only["hits"].get<int>() == 6);
  CHECK(only["residual"].get<double>() <= 1e-10);
  CHECK(res["morse_lower_bound"].get<int>() == 4);
}

TEST_CASE("census resolves the striped branch against the 1d oracle", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "census";
  cfg.experiment.seed = 3;
  cfg.experiment.has_seed = true;
  cfg.experiment.eps = 0.9 / (2.0 * std::numbers::pi);
  cfg.experiment.nu = 0.0;
  cfg.experiment.starts = 10;

  RunRecord rec = run_experiment(cfg, 4);
  CHECK_FALSE(rec.any_failure());
  const json& res = rec.doc["results"];
  CHECK(res["distinct_count"].get<int>() >= 2);

  int stripes = 0;
  for (const json& d : res["distinct"]) {
    CHECK(d["residual"].get<double>() <= 1e-10);
    CHECK(std::abs(d["mass"].get<double>()) <= 1e-10);
    if (d["tag"] == "stripe") {
      ++stripes;
      REQUIRE(d.contains("oracle"));
      CHECK(d["oracle"]["lambda_difference"].get<double>() <= 1e-6);
      CHECK(d["oracle"]["profile_distance"].get<double>() <= 1e-6);
    }
  }
  CHECK(stripes >= 1);
}

TEST_CASE("oracle runner reports found and not-found outcomes", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "oracle1d";
  cfg.experiment.eps = 0.12;
  cfg.experiment.nu = 0.0;
  cfg.experiment.period = 1.0;
  cfg.experiment.mesh = 256;

  RunRecord found = run_experiment(cfg, 1);
  CHECK_FALSE(found.any_failure());
  CHECK(found.doc["results"]["found"].get<bool>());
  CHECK(found.doc["results"]["residual"].get<double>() <= 1e-10);
  CHECK(found.doc["results"]["values"].size() == 256);

  cfg.experiment.eps = 0.2;  // above the bifurcation point 1/(2 pi)
  RunRecord missing = run_experiment(cfg, 1);
  CHECK_FALSE(missing.any_failure());
  CHECK_FALSE(missing.doc["results"]["found"].get<bool>());
  CHECK(missing.doc["results"]["reason"].is_string());
}

TEST_CASE("experiment documents are scheduling independent", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "check-calculus";
  cfg.experiment.seed = 7;
  cfg.experiment.has_seed = true;
  cfg.experiment.samples = 10;

  RunRecord serial = run_experiment(cfg, 1);
  RunRecord wide = run_experiment(cfg, 4);
  RunRecord again = run_experiment(cfg, 4);
  CHECK_FALSE(serial.any_failure());
  CHECK(serial.doc.dump() == wide.doc.dump());
  CHECK(wide.doc.dump() == again.doc.dump());
}

TEST_CASE("report emission and record round trip", "[lab]") {
  RunConfig cfg;
  cfg.experiment.kind = "degenerate-eps";
  cfg.experiment.nu = 0.1;
  cfg.experiment.j_max = 4;
  RunRecord rec = run_experiment(cfg, 1);

  TempDir a("report-a");
  EmitResult ea = emit_report(rec, a.str(), {"doc", "table", "plots"});
  REQUIRE_FALSE(ea.files.empty());
  bool saw_doc = false, saw_csv = false, saw_svg = false;
  for (const std::string& f : ea.files) {
    const std::string body = slurp(f);
    CHECK_FALSE(body.empty());
    if (f.ends_with("result.json")) saw_doc = true;
    if (f.ends_with("predictions.csv")) saw_csv = true;
    if (f.ends_with(".svg")) {
      saw_svg = true;
      CHECK(body.rfind("<svg", 0) == 0);
    }
  }
  CHECK(saw_doc);
  CHECK(saw_csv);
  CHECK(saw_svg);

  // Round trip: the loaded record carries the same document and checks.
  RunRecord loaded = load_record(a.str() + "/result.json");
  CHECK(loaded.doc == rec.doc);
  CHECK(loaded.checks.size() == rec.checks.size());

  // Re-emission from the loaded record is byte-identical.
  TempDir b("report-b");
  emit_report(loaded, b.str(), {"doc", "table", "plots"});
  CHECK(slurp(a.str() + "/result.json") == slurp(b.str() + "/result.json"));
  CHECK(slurp(a.str() + "/predictions.csv") == slurp(b.str() + "/predictions.csv"));

  // Failure modes.
  CHECK_THROWS_AS(emit_report(rec, a.str(), {"doc", "pdf"}), std::runtime_error);
  CHECK_THROWS_AS(load_record(a.str() + "/missing.json"), std::runtime_error);
  const std::string bogus = a.str() + "/bogus.json";
  detail::write_text(bogus, "{\"schema_version\": 1}\n");
  CHECK_THROWS_AS(load_record(bogus), std::runtime_error);
  detail::write_text(bogus, "{\"schema_version\": 99, \"kind\": \"solve\"}\n");
  CHECK_THROWS_AS(load_record(bogus), std::runtime_error);
}
