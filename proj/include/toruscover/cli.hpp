#pragma once

// Command-line front end: subcommand dispatch, config resolution
// (defaults -> --config file -> --key overrides), worker-pool sizing, and
// emission of the run directory (manifest.json + per-pipeline outputs).
//
// Exit codes: 0 success, 1 input error, 2 resource/numeric error,
// 3 lemma-suite failure.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "toruscover/analytic.hpp"
#include "toruscover/config.hpp"
#include "toruscover/experiments.hpp"
#include "toruscover/io.hpp"
#include "toruscover/sampling.hpp"
#include "toruscover/version.hpp"

namespace toruscover::cli {

using config::ExperimentConfig;
using json = nlohmann::ordered_json;
using torus::PointSet;
using torus::Torus;
using bodies::Body;

namespace detail {

inline std::string iso_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// --threads beats TORUSCOVER_THREADS beats machine parallelism.
inline int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("TORUSCOVER_THREADS")) {
    const std::string v(env);
    try {
      std::size_t pos = 0;
      const int n = std::stoi(v, &pos);
      if (pos != v.size() || n <= 0) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      fail_input("TORUSCOVER_THREADS must be a positive integer, got '" + v + "'");
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct RunContext {
  std::string subcommand;
  ExperimentConfig cfg;
  std::string out_dir;
  int threads = 1;
  std::string started_utc;
  std::vector<std::string> outputs;  // file names relative to out_dir

  std::string path(const std::string& name) const {
    return (std::filesystem::path(out_dir) / name).string();
  }

  void emit(const std::string& name, const std::string& content) {
    io::write_text_file(path(name), content);
    outputs.push_back(name);
  }

  void finish() {
    json manifest;
    manifest["tool"] = "toruscover";
    manifest["version"] = kVersion;
    manifest["subcommand"] = subcommand;
    manifest["master_seed"] = cfg.master_seed;
    manifest["m_ratio"] = cfg.torus_volume_ratio();
    manifest["config"] = config::config_to_json(cfg);
    manifest["runtime"]["threads"] = threads;
    manifest["runtime"]["started_utc"] = started_utc;
    manifest["runtime"]["finished_utc"] = iso_utc_now();
    manifest["outputs"] = outputs;
    io::write_text_file(path("manifest.json"), manifest.dump(2) + "\n");
    std::cout << "wrote " << path("manifest.json") << "\n";
  }
};

inline void run_sample(RunContext& ctx) {
  ctx.cfg.validate();
  const Torus t = ctx.cfg.make_torus();
  const Body body = ctx.cfg.make_body();
  const PointSet ps = sampling::sample_ppp(t, ctx.cfg.intensity,
                                           SeedSpec{ctx.cfg.master_seed, 0},
                                           ctx.cfg.expected_points_cap);
  json rep;
  rep["dim"] = t.dim();
  rep["count"] = ps.size();
  rep["torus_volume"] = t.volume();
  rep["body_volume"] = volume(body);
  rep["covering_density"] = coverage::covering_density(ps, body);
  ctx.emit("points.csv", io::points_csv(ps));
  ctx.emit("trials.csv",
           io::csv_table({"trial", "count", "density"},
                         {{0.0, double(ps.size()),
                           coverage::covering_density(ps, body)}}));
  ctx.emit("report.json", rep.dump(2) + "\n");
}

inline void run_cover(RunContext& ctx) {
  const auto rep = experiments::run_cover(ctx.cfg, ctx.threads);
  ctx.emit("trials.csv", io::csv_table(rep.trial_columns, rep.trial_log));
  ctx.emit("report.json", io::to_json(rep).dump(2) + "\n");
}

inline void run_scan(RunContext& ctx) {
  const auto table = experiments::run_coverage_scan(ctx.cfg, ctx.threads);
  ctx.emit("scan.csv", io::csv_table(io::scan_columns(), io::scan_rows(table)));
  ctx.emit("trials.csv", io::csv_table(table.trial_columns, table.trial_log));
  ctx.emit("report.json", io::to_json(table).dump(2) + "\n");
}

inline void run_multiplicity(RunContext& ctx) {
  const auto rep = experiments::run_multiplicity_profile(ctx.cfg, ctx.threads);
  ctx.emit("trials.csv", io::csv_table(rep.trial_columns, rep.trial_log));
  ctx.emit("report.json", io::to_json(rep).dump(2) + "\n");
}

inline void run_e123(RunContext& ctx) {
  const auto rep = experiments::run_e123_diagnostics(ctx.cfg, ctx.threads);
  ctx.emit("trials.csv", io::csv_table(rep.trial_columns, rep.trial_log));
  ctx.emit("report.json", io::to_json(rep).dump(2) + "\n");
}

inline void run_second_moment(RunContext& ctx) {
  const auto rep = experiments::run_second_moment(ctx.cfg, ctx.threads);
  ctx.emit("trials.csv", io::csv_table(rep.trial_columns, rep.trial_log));
  ctx.emit("report.json", io::to_json(rep).dump(2) + "\n");
}

/// Returns false when any ledger row failed (exit 3).
inline bool run_verify_lemmas(RunContext& ctx) {
  const auto rep = experiments::run_lemma_suite(ctx.cfg);
  ctx.emit("lemmas.txt", io::lemma_ledger_text(rep));
  ctx.emit("report.json", io::to_json(rep).dump(2) + "\n");
  return rep.all_pass;
}

inline int run_constants(double tolerance, double delta) {
  json out;
  const auto xi = analytic::solve_xi(tolerance);
  const auto xi0 = analytic::solve_xi0(tolerance);
  out["xi"] = xi.value;
  out["xi_residual"] = xi.residual;
  out["xi0"] = xi0.value;
  out["xi0_residual"] = xi0.residual;
  out["xi0_identity_gap"] = std::fabs(xi0.value - (2.0 * xi.value - 1.0));
  out["delta"] = delta;
  out["beta"] = analytic::choose_beta(delta).value;
  json nu = json::array();
  for (int n = 1; n <= 12; ++n) {
    json row;
    row["n"] = n;
    row["nu_exact"] = analytic::nu_exact(n);
    row["nu_asymptotic"] = analytic::nu_asymptotic(n);
    nu.push_back(row);
  }
  out["unit_ball_volumes"] = nu;
  json ratios = json::array();
  for (int n : {10, 50, 100}) {
    json row;
    row["n"] = n;
    row["asymptotic_over_exact"] =
        analytic::nu_asymptotic(n) / analytic::nu_exact(n);
    ratios.push_back(row);
  }
  out["asymptotic_ratio"] = ratios;
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SubcommandArgs {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::map<std::string, std::string> overrides;
};

/// Registers --config/--out/--threads plus one --key option per config key.
inline void add_run_options(CLI::App* sub, SubcommandArgs& args) {
  // long-form help only: the default -h short flag would collide with the
  // --h net-resolution option
  sub->set_help_flag("--help", "print this help message and exit");
  sub->add_option("--config", args.config_path,
                  "config file (flat key=value, or a manifest.json to re-run)");
  sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--threads", args.threads, "worker threads (default: machine)");
  for (const auto& key : config::config_keys()) {
    args.overrides[key] = {};
    sub->add_option("--" + key, args.overrides[key],
                    "override config key " + key);
  }
}

inline ExperimentConfig resolve_config(const CLI::App* sub,
                                       const SubcommandArgs& args) {
  ExperimentConfig cfg;
  if (sub->count("--config") > 0) cfg = config::load_config(args.config_path);
  for (const auto& key : config::config_keys())
    if (sub->count("--" + key) > 0)
      config::apply_key(cfg, key, args.overrides.at(key));
  return cfg;
}

}  // namespace detail

/// Entry point behind main(); maps every failure to the exit-code contract.
inline int dispatch(int argc, const char* const* argv) {
  CLI::App app{"random coverings of flat tori: simulation and verification"};
  app.require_subcommand(1);

  double tolerance = 1e-14;
  double constants_delta = 0.3;
  CLI::App* constants = app.add_subcommand(
      "constants", "print the solved constants and unit-ball volume table");
  constants->add_option("--tolerance", tolerance, "root-solve tolerance");
  constants->add_option("--delta", constants_delta,
                        "delta used for the beta constant");

  const std::vector<std::string> run_names = {
      "sample",      "cover", "scan",          "multiplicity",
      "e123",        "second-moment", "verify-lemmas"};
  const std::map<std::string, std::string> run_help = {
      {"sample", "draw one Poisson sample and write the points"},
      {"cover", "estimate the covering probability at one intensity"},
      {"scan", "scan an intensity grid and locate the covering threshold"},
      {"multiplicity", "profile covering multiplicity at a reference point"},
      {"e123", "saturation / occupancy event diagnostics for ball coverings"},
      {"second-moment", "analytic vs empirical uncovered-target moments"},
      {"verify-lemmas", "check the analytic inequality ledger"}};
  std::map<std::string, detail::SubcommandArgs> args;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : run_names) {
    CLI::App* sub = app.add_subcommand(name, run_help.at(name));
    detail::add_run_options(sub, args[name]);
    subs[name] = sub;
  }

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (constants->parsed())
      return detail::run_constants(tolerance, constants_delta);

    for (const auto& name : run_names) {
      if (!subs.at(name)->parsed()) continue;
      const auto& a = args.at(name);
      detail::RunContext ctx;
      ctx.subcommand = name;
      ctx.cfg = detail::resolve_config(subs.at(name), a);
      ctx.threads = detail::resolve_threads(a.threads);
      ctx.out_dir = a.out_dir.empty() ? "toruscover-out/" + name : a.out_dir;
      std::filesystem::create_directories(ctx.out_dir);
      ctx.started_utc = detail::iso_utc_now();

      bool lemmas_ok = true;
      if (name == "sample") detail::run_sample(ctx);
      else if (name == "cover") detail::run_cover(ctx);
      else if (name == "scan") detail::run_scan(ctx);
      else if (name == "multiplicity") detail::run_multiplicity(ctx);
      else if (name == "e123") detail::run_e123(ctx);
      else if (name == "second-moment") detail::run_second_moment(ctx);
      else lemmas_ok = detail::run_verify_lemmas(ctx);

      ctx.finish();
      return lemmas_ok ? 0 : 3;
    }
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const resource_error& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::bad_alloc&) {
    std::cerr << "resource error: out of memory\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace toruscover::cli
