// Command-line driver: config parsing (flat key=value and JSON manifests),
// option overrides, exit codes, output files, and byte-identical re-runs
// from a previously written manifest.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "toruscover/cli.hpp"

using toruscover::input_error;
namespace config = toruscover::config;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.push_back("toruscover");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  return toruscover::cli::dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_test_runs") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("flat config parsing") {
  const std::string text =
      "# geometry\n"
      "body_kind = cube\n"
      "body_param = 0.75\n"
      "torus_sides = 2, 2, 2\n"
      "\n"
      "trials = 17        # inline comment\n"
      "intensity_grid = 1.0, 2.0, 3.5\n"
      "master_seed = 99\n";
  const auto cfg = config::parse_flat_config(text);
  CHECK(cfg.body_kind == "cube");
  CHECK(cfg.body_param == 0.75);
  CHECK(cfg.torus_sides == toruscover::Vec{2.0, 2.0, 2.0});
  CHECK(cfg.trials == 17);
  CHECK(cfg.intensity_grid == toruscover::Vec{1.0, 2.0, 3.5});
  CHECK(cfg.master_seed == 99);

  // later assignments win
  const auto dup = config::parse_flat_config("trials = 3\ntrials = 8\n");
  CHECK(dup.trials == 8);

  CHECK_THROWS_AS(config::parse_flat_config("no_such_key = 1\n"), input_error);
  CHECK_THROWS_AS(config::parse_flat_config("trials = banana\n"), input_error);
  CHECK_THROWS_AS(config::parse_flat_config("just a line\n"), input_error);
  // the unknown key is named in the diagnostic
  try {
    config::parse_flat_config("typo_key = 1\n");
    FAIL("expected input_error");
  } catch (const input_error& e) {
    CHECK(std::string(e.what()).find("typo_key") != std::string::npos);
  }
}

TEST_CASE("config serialization covers every key and round-trips") {
  config::ExperimentConfig cfg;
  cfg.body_kind = "ellipsoid";
  cfg.ellipsoid_axes = {1.5, 0.5};
  cfg.torus_sides = {4.0, 5.0};
  cfg.intensity_grid = {0.5, 1.5};
  cfg.h_refine = 2;
  cfg.mult_trials = 9;

  const auto j = config::config_to_json(cfg);
  const auto keys = config::config_keys();
  CHECK(keys.size() == j.size());
  for (const auto& k : keys) CHECK(j.contains(k));

  // apply every serialized value onto a fresh config: fields must match
  config::ExperimentConfig back;
  for (const auto& k : keys) config::detail::apply_json_value(back, k, j.at(k));
  CHECK(config::config_to_json(back) == j);
}

TEST_CASE("config files: flat format and manifest-style json") {
  const auto dir = fresh_dir("config_files");

  const fs::path flat = dir / "run.cfg";
  toruscover::io::write_text_file(flat, "body_kind = ball\nbody_param = 0.4\n"
                                        "torus_sides = 2,2\ntrials = 6\n");
  const auto cfg = config::load_config(flat);
  CHECK(cfg.body_param == 0.4);
  CHECK(cfg.trials == 6);

  const fs::path manifest = dir / "manifest.json";
  config::json m;
  m["tool"] = "toruscover";
  m["config"] = config::config_to_json(cfg);
  m["config"]["trials"] = 11;
  toruscover::io::write_text_file(manifest, m.dump(2) + "\n");
  const auto from_manifest = config::load_config(manifest);
  CHECK(from_manifest.trials == 11);
  CHECK(from_manifest.body_param == 0.4);

  const fs::path broken = dir / "broken.json";
  toruscover::io::write_text_file(broken, "{ not json");
  CHECK_THROWS_AS(config::load_config(broken), input_error);
  CHECK_THROWS_AS(config::load_config(dir / "missing.cfg"), input_error);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli({}) == 1);                    // a subcommand is required
  CHECK(run_cli({"frobnicate"}) == 1);        // unknown subcommand
  CHECK(run_cli({"--help"}) == 0);
  CHECK(run_cli({"constants"}) == 0);
  CHECK(run_cli({"constants", "--delta", "0.9"}) == 0);

  // input error: the ball does not fit the torus
  const auto dir = fresh_dir("exit_codes");
  CHECK(run_cli({"cover", "--out", (dir / "bad_body").string(),
                 "--body_kind", "ball", "--body_param", "1.2",
                 "--torus_sides", "2,2", "--intensity", "1", "--trials", "2"}) == 1);

  // resource error: h so small the probe net exceeds its cardinality cap
  CHECK(run_cli({"cover", "--out", (dir / "bad_net").string(),
                 "--body_kind", "ball", "--body_param", "0.4",
                 "--torus_sides", "3,3", "--intensity", "1", "--trials", "2",
                 "--h", "1e-6"}) == 2);
}

TEST_CASE("sample subcommand writes points, trials, report and manifest") {
  const auto dir = fresh_dir("sample_run");
  const int rc = run_cli({"sample", "--out", dir.string(), "--torus_sides", "2,3",
                          "--body_kind", "ball", "--body_param", "0.4",
                          "--intensity", "3", "--master_seed", "5"});
  REQUIRE(rc == 0);
  for (const char* name : {"points.csv", "trials.csv", "report.json", "manifest.json"})
    CHECK(fs::exists(dir / name));

  const auto manifest = config::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("tool") == "toruscover");
  CHECK(manifest.at("subcommand") == "sample");
  CHECK(manifest.at("master_seed") == 5);
  CHECK(manifest.at("config").at("intensity") == 3.0);
  CHECK(manifest.contains("m_ratio"));
  CHECK(manifest.at("runtime").contains("threads"));
  const auto outputs = manifest.at("outputs");
  std::set<std::string> names(outputs.begin(), outputs.end());
  CHECK(names == std::set<std::string>{"points.csv", "report.json", "trials.csv"});

  const auto report = config::json::parse(slurp(dir / "report.json"));
  CHECK(report.at("dim") == 2);
  CHECK(report.at("torus_volume") == 6.0);

  // the points file has a header line, a dim/count metadata line, then one
  // row per sampled point
  const std::string pts = slurp(dir / "points.csv");
  const auto rows = std::count(pts.begin(), pts.end(), '\n');
  CHECK(rows == 2 + report.at("count").get<long long>());
}

TEST_CASE("environment fallback for worker threads") {
  const auto dir = fresh_dir("env_threads");
  setenv("TORUSCOVER_THREADS", "3", 1);
  CHECK(run_cli({"sample", "--out", (dir / "ok").string(), "--torus_sides", "2,2",
                 "--intensity", "1"}) == 0);
  setenv("TORUSCOVER_THREADS", "abc", 1);
  CHECK(run_cli({"sample", "--out", (dir / "bad").string(), "--torus_sides", "2,2",
                 "--intensity", "1"}) == 1);
  setenv("TORUSCOVER_THREADS", "0", 1);
  CHECK(run_cli({"sample", "--out", (dir / "zero").string(), "--torus_sides", "2,2",
                 "--intensity", "1"}) == 1);
  unsetenv("TORUSCOVER_THREADS");
  // an explicit option beats the environment
  setenv("TORUSCOVER_THREADS", "abc", 1);
  CHECK(run_cli({"sample", "--out", (dir / "cli_wins").string(), "--torus_sides",
                 "2,2", "--intensity", "1", "--threads", "2"}) == 0);
  unsetenv("TORUSCOVER_THREADS");
}

TEST_CASE("verify-lemmas exits zero and records the ledger") {
  const auto dir = fresh_dir("lemmas");
  const int rc = run_cli({"verify-lemmas", "--out", dir.string(),
                          "--mc_samples", "200000"});
  REQUIRE(rc == 0);
  const std::string ledger = slurp(dir / "lemmas.txt");
  CHECK(ledger.find("ALL PASS") != std::string::npos);
  CHECK(ledger.find("FAIL") == std::string::npos);
  CHECK(ledger.find("poisson-upper-tail-bound") != std::string::npos);
  const auto report = config::json::parse(slurp(dir / "report.json"));
  CHECK(report.at("all_pass") == true);
}

TEST_CASE("a manifest reproduces a scan byte for byte across thread counts") {
  const auto dir1 = fresh_dir("scan_a");
  const auto dir2 = fresh_dir("scan_b");
  const std::vector<std::string> base{
      "scan",           "--body_kind",     "ball", "--body_param", "0.3",
      "--torus_sides",  "3",               "--intensity_grid", "3,4,5,6,7,8",
      "--trials",       "60",              "--master_seed", "21",
      "--h",            "0.01",            "--bootstrap_resamples", "50",
      "--mult_trials",  "4"};

  auto args1 = base;
  args1.insert(args1.end(), {"--out", dir1.string(), "--threads", "1"});
  REQUIRE(run_cli(args1) == 0);

  const std::vector<std::string> args2{
      "scan", "--config", (dir1 / "manifest.json").string(),
      "--out", dir2.string(), "--threads", "7"};
  REQUIRE(run_cli(args2) == 0);

  for (const char* name : {"scan.csv", "trials.csv", "report.json"}) {
    INFO(name);
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
  // the second manifest repeats the effective config exactly
  const auto m1 = config::json::parse(slurp(dir1 / "manifest.json"));
  const auto m2 = config::json::parse(slurp(dir2 / "manifest.json"));
  CHECK(m1.at("config") == m2.at("config"));
  CHECK(m1.at("m_ratio") == m2.at("m_ratio"));

  // explicit option overrides beat the loaded config
  const auto dir3 = fresh_dir("scan_c");
  std::vector<std::string> args3{
      "scan", "--config", (dir1 / "manifest.json").string(),
      "--out", dir3.string(), "--trials", "10"};
  REQUIRE(run_cli(args3) == 0);
  const auto m3 = config::json::parse(slurp(dir3 / "manifest.json"));
  CHECK(m3.at("config").at("trials") == 10);
  CHECK(m3.at("config").at("master_seed") == 21);
}
