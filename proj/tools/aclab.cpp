// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: config-driven experiment runners plus re-emission
// of stored result documents. Exit codes: 0 success, 2 itemized check
// failure, 1 hard error (bad config, bad input, solver hard failure).

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aclab/report.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::vector<std::string> formats;
};

void add_global_flags(CLI::App* cmd, GlobalOptions& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config file (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "random seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--format", opts.formats, "output formats: table, doc, plots")
      ->check(CLI::IsMember({"table", "doc", "plots"}));
}

bool needs_seed(const aclab::RunConfig& cfg) {
  const std::string& k = cfg.experiment.kind;
  if (k == "check-calculus" || k == "probe-generic" || k == "census") return true;
  if ((k == "solve" || k == "sweep") && cfg.experiment.init == "random") return true;
  return false;
}

int run_kind(const std::string& kind, const GlobalOptions& opts) {
  aclab::RunConfig cfg = aclab::load_config_file(opts.config_path);
  if (cfg.experiment.kind != kind)
    throw aclab::ConfigError("config error at 'experiment.kind': config declares '" +
                             cfg.experiment.kind + "' but the subcommand is '" + kind + "'");
  if (opts.seed_set) {
    cfg.experiment.seed = opts.seed;
    cfg.experiment.has_seed = true;
  }
  if (needs_seed(cfg) && !cfg.experiment.has_seed)
    throw aclab::ConfigError("config error at 'experiment.seed': a seed is required for "
                             "stochastic experiments (set it in the config or via --seed)");
  if (!opts.out_dir.empty()) cfg.output.directory = opts.out_dir;
  if (!opts.formats.empty()) cfg.output.formats = opts.formats;

  // Growth validation is mandatory at the CLI boundary.
  const aclab::Potential pot = cfg.potential.build();
  const aclab::GrowthReport growth = aclab::validate_growth(
      pot, cfg.manifold.dim, cfg.potential.range[0], cfg.potential.range[1]);
  if (!growth.ok)
    throw aclab::ConfigError("config error at 'potential': " + growth.message);

  const aclab::RunRecord rec = aclab::run_experiment(cfg, opts.threads);
  const aclab::EmitResult emitted =
      aclab::emit_report(rec, cfg.output.directory, cfg.output.formats);

  for (const aclab::CheckItem& c : rec.checks)
    std::printf("check %-38s %s  %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                c.detail.c_str());
  for (const std::string& f : emitted.files) std::printf("wrote %s\n", f.c_str());
  std::fprintf(stderr, "wall_seconds %.3f\n", rec.wall_seconds);
  if (rec.any_failure()) {
    std::printf("result: check failure\n");
    return 2;
  }
  std::printf("result: ok\n");
  return 0;
}

int run_report(const std::string& record_path, const GlobalOptions& opts) {
  const aclab::RunRecord rec = aclab::load_record(record_path);
  const std::string out_dir = opts.out_dir.empty() ? "out" : opts.out_dir;
  const std::vector<std::string> formats =
      opts.formats.empty() ? std::vector<std::string>{"table", "plots"} : opts.formats;
  const aclab::EmitResult emitted = aclab::emit_report(rec, out_dir, formats);
  for (const std::string& f : emitted.files) std::printf("wrote %s\n", f.c_str());
  if (rec.any_failure()) {
    std::printf("result: check failure (recorded)\n");
    return 2;
  }
  std::printf("result: ok\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(aclab::kToolName) +
               " — volume-constrained Allen-Cahn laboratory on closed manifolds"};
  app.set_version_flag("--version", std::string(aclab::kToolVersion));
  app.require_subcommand(1);

  static const std::vector<std::string> kinds{"solve",          "sweep",
                                              "degenerate-eps", "check-calculus",
                                              "probe-generic",  "census",
                                              "oracle1d"};
  std::vector<GlobalOptions> opt_store(kinds.size() + 1);
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(kinds[i], "run the " + kinds[i] + " experiment");
    add_global_flags(cmd, opt_store[i], true);
  }
  GlobalOptions& report_opts = opt_store.back();
  std::string record_path;
  CLI::App* report_cmd =
      app.add_subcommand("report", "re-emit tables/plots from a stored result document");
  report_cmd->add_option("record", record_path, "path to result.json")->required();
  add_global_flags(report_cmd, report_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (std::size_t i = 0; i < kinds.size(); ++i)
      if (app.get_subcommand(kinds[i])->parsed()) return run_kind(kinds[i], opt_store[i]);
    if (report_cmd->parsed()) return run_report(record_path, report_opts);
    std::fprintf(stderr, "error: no subcommand\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
