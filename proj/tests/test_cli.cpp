// End-to-end tests for the seqab command-line tool. Each case runs the
// built binary in a scratch directory and inspects exit codes and files.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "seqab/basis.hpp"
#include "seqab/config.hpp"
#include "seqab/csv.hpp"
#include "seqab/sequential.hpp"
#include "seqab/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_bin() { return SEQAB_CLI_BIN; }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("seqab_cli_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  f << text;
}

RunResult run_cli(const TempDir& dir, const std::string& args,
                  const std::string& env_prefix = "") {
  const std::string out_path = dir.file("__stdout.txt");
  const std::string err_path = dir.file("__stderr.txt");
  const std::string cmd = env_prefix + cli_bin() + " " + args + " >" +
                          out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string simulate_config(const std::string& env_kind, double delta,
                            std::int64_t length, std::uint64_t seed,
                            const std::string& design_kind = "alternating",
                            bool zero_noise = false) {
  json j;
  j["env"]["kind"] = env_kind;
  j["env"]["delta"] = delta;
  if (zero_noise) j["env"]["zero_noise"] = true;
  j["design"]["kind"] = design_kind;
  j["length"] = length;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

json test_config(const std::vector<std::int64_t>& stages, double gamma,
                 int degree, int state_dim, int bootstrap_b,
                 std::uint64_t plan_seed) {
  json j;
  j["estimator"]["gamma"] = gamma;
  j["estimator"]["basis"]["kind"] = "polynomial";
  j["estimator"]["basis"]["degree"] = degree;
  j["estimator"]["basis"]["state_dim"] = state_dim;
  j["plan"]["stage_times"] = stages;
  j["plan"]["alpha"] = 0.05;
  j["plan"]["spending"]["kind"] = "power";
  j["plan"]["spending"]["theta"] = 3.0;
  j["plan"]["bootstrap_b"] = bootstrap_b;
  j["plan"]["seed"] = plan_seed;
  j["reference"]["kind"] = "point_mass";
  j["reference"]["state"] = std::vector<double>(state_dim, 0.0);
  return j;
}

}  // namespace

TEST_CASE("cli: simulate with length zero writes a header-only csv") {
  TempDir dir("sim_empty");
  spit(dir.file("cfg.json"), simulate_config("example1", 0.0, 0, 42));
  const auto r = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                  " --out " + dir.file("traj.csv"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("wrote") != std::string::npos);
  CHECK(slurp(dir.file("traj.csv")) == "t,s1,a,y\n");
  const json sidecar = json::parse(slurp(dir.file("traj.csv.json")));
  CHECK(sidecar.at("seed").get<std::uint64_t>() == 42);
}

TEST_CASE("cli: simulate is reproducible for a fixed seed") {
  TempDir dir("sim_repro");
  spit(dir.file("cfg.json"), simulate_config("example2", 0.3, 200, 7,
                                             "markov"));
  const auto r1 = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                   " --out " + dir.file("a.csv"));
  const auto r2 = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                   " --out " + dir.file("b.csv"));
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));
  CHECK(slurp(dir.file("a.csv.json")) == slurp(dir.file("b.csv.json")));

  const auto r3 = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                   " --seed 8 --out " + dir.file("c.csv"));
  CHECK(r3.exit_code == 0);
  CHECK(slurp(dir.file("a.csv")) != slurp(dir.file("c.csv")));
}

TEST_CASE("cli: simulate matches the library and honors the design") {
  TempDir dir("sim_match");
  spit(dir.file("cfg.json"), simulate_config("example1", 0.2, 50, 99));
  const auto r = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                  " --out " + dir.file("traj.csv"));
  CHECK(r.exit_code == 0);

  const seqab::Trajectory traj =
      seqab::read_trajectory_csv_file(dir.file("traj.csv"));
  REQUIRE(traj.observations.size() == 50);
  CHECK(traj.state_dim == 1);
  for (size_t i = 0; i < traj.observations.size(); ++i)
    CHECK(traj.observations[i].a == static_cast<int>(i % 2));

  seqab::EnvSpec env;
  env.kind = seqab::EnvSpec::Kind::example1;
  env.delta = 0.2;
  seqab::DesignPolicy design;
  design.kind = seqab::DesignPolicy::Kind::alternating;
  const auto direct = seqab::simulate(env, design, 50, 99);
  REQUIRE(direct.size() == traj.observations.size());
  for (size_t i = 0; i < direct.size(); ++i) {
    CHECK(traj.observations[i].t == direct[i].t);
    CHECK(traj.observations[i].a == direct[i].a);
    CHECK(traj.observations[i].y == direct[i].y);
    CHECK((traj.observations[i].s - direct[i].s)
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((traj.observations[i].s_next - direct[i].s_next)
              .lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("cli: SEQAB_SEED env var acts as the --seed option") {
  TempDir dir("sim_env");
  spit(dir.file("cfg.json"), simulate_config("example2", 0.0, 80, 5,
                                             "markov"));
  const auto flag = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                     " --seed 9 --out " + dir.file("f.csv"));
  const auto env = run_cli(dir,
                           "simulate --config " + dir.file("cfg.json") +
                               " --out " + dir.file("e.csv"),
                           "SEQAB_SEED=9 ");
  const auto base = run_cli(dir, "simulate --config " + dir.file("cfg.json") +
                                     " --out " + dir.file("g.csv"));
  CHECK(flag.exit_code == 0);
  CHECK(env.exit_code == 0);
  CHECK(base.exit_code == 0);
  CHECK(slurp(dir.file("f.csv")) == slurp(dir.file("e.csv")));
  CHECK(slurp(dir.file("f.csv")) != slurp(dir.file("g.csv")));
  const json sidecar = json::parse(slurp(dir.file("e.csv.json")));
  CHECK(sidecar.at("seed").get<std::uint64_t>() == 9);
}

TEST_CASE("cli: test reproduces the library pipeline on simulated data") {
  TempDir dir("roundtrip");
  spit(dir.file("sim.json"), simulate_config("example2", 0.3, 300, 21,
                                             "markov"));
  const auto sim = run_cli(dir, "simulate --config " + dir.file("sim.json") +
                                    " --out " + dir.file("traj.csv"));
  REQUIRE(sim.exit_code == 0);

  const json tcfg = test_config({150, 300}, 0.6, 2, 1, 200, 11);
  spit(dir.file("test.json"), tcfg.dump(2) + "\n");
  const auto tst = run_cli(dir, "test --config " + dir.file("test.json") +
                                    " --data " + dir.file("traj.csv") +
                                    " --out " + dir.file("report.json"));
  REQUIRE(tst.exit_code == 0);
  CHECK(tst.out.find("decision:") != std::string::npos);
  const json report = json::parse(slurp(dir.file("report.json")));

  // Re-run the same analysis through the library on the same csv.
  const seqab::TestJob job = seqab::parse_test_config(tcfg.dump());
  const seqab::Trajectory traj =
      seqab::read_trajectory_csv_file(dir.file("traj.csv"));
  const seqab::ReferenceDistribution ref =
      seqab::resolve_reference(job.reference, job.plan.seed);
  const seqab::ContrastVector u =
      seqab::compute_contrast(job.estimator.basis, ref);
  seqab::VectorObservationSource source(traj.observations);
  const auto snaps = seqab::run_sequential_test(
      source, job.plan, job.estimator, u, /*stop_on_rejection=*/true,
      static_cast<std::int64_t>(traj.observations.size()));

  REQUIRE(report.at("stages").size() == snaps.size());
  bool any_rejected = false;
  for (size_t i = 0; i < snaps.size(); ++i) {
    const json& s = report.at("stages")[i];
    CHECK(s.at("k").get<int>() == snaps[i].k);
    CHECK(s.at("T_k").get<std::int64_t>() == snaps[i].t_k);
    CHECK(s.at("tau_hat").get<double>() == snaps[i].tau_hat);
    CHECK(s.at("z").get<double>() == snaps[i].z_stat);
    CHECK(s.at("threshold").get<double>() == snaps[i].threshold);
    CHECK(s.at("spending_consumed").get<double>() ==
          snaps[i].spending_consumed);
    CHECK(s.at("rejected").get<bool>() == snaps[i].rejected);
    any_rejected = any_rejected || snaps[i].rejected;
  }
  CHECK(report.at("planned_stages").get<int>() == 2);
  CHECK(report.at("observations").get<std::int64_t>() == 300);
  const std::string status = report.at("status").get<std::string>();
  if (any_rejected)
    CHECK(status == "rejected");
  else
    CHECK(status == "not_rejected");

  // Bitwise-stable rerun.
  const auto tst2 = run_cli(dir, "test --config " + dir.file("test.json") +
                                     " --data " + dir.file("traj.csv") +
                                     " --out " + dir.file("report2.json"));
  REQUIRE(tst2.exit_code == 0);
  CHECK(slurp(dir.file("report.json")) == slurp(dir.file("report2.json")));

  // Changing the plan seed moves the bootstrap thresholds but not z.
  const auto tst3 = run_cli(dir, "test --config " + dir.file("test.json") +
                                     " --seed 55 --data " + dir.file("traj.csv") +
                                     " --out " + dir.file("report3.json"));
  REQUIRE(tst3.exit_code == 0);
  const json report3 = json::parse(slurp(dir.file("report3.json")));
  REQUIRE(report3.at("stages").size() >= 1);
  CHECK(report3.at("stages")[0].at("z").get<double>() ==
        report.at("stages")[0].at("z").get<double>());
  CHECK(report3.at("stages")[0].at("threshold").get<double>() !=
        report.at("stages")[0].at("threshold").get<double>());
}

TEST_CASE("cli: test reports partial data when the csv is short") {
  TempDir dir("partial");
  spit(dir.file("sim.json"), simulate_config("example1", 0.0, 100, 3));
  REQUIRE(run_cli(dir, "simulate --config " + dir.file("sim.json") +
                           " --out " + dir.file("traj.csv"))
              .exit_code == 0);
  const json tcfg = test_config({80, 160, 240}, 0.5, 1, 1, 100, 2);
  spit(dir.file("test.json"), tcfg.dump(2) + "\n");
  const auto r = run_cli(dir, "test --config " + dir.file("test.json") +
                                  " --data " + dir.file("traj.csv") +
                                  " --out " + dir.file("report.json"));
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(slurp(dir.file("report.json")));
  if (report.at("status").get<std::string>() != "rejected") {
    CHECK(report.at("status").get<std::string>() == "partial_data");
    CHECK(report.at("stages").size() == 1);
    CHECK(report.at("decision_stage").is_null());
    CHECK(r.out.find("partial data") != std::string::npos);
  }
}

TEST_CASE("cli: a flat trajectory yields a degenerate stage, not a crash") {
  TempDir dir("degenerate");
  spit(dir.file("sim.json"),
       simulate_config("example1", 0.0, 100, 17, "alternating",
                       /*zero_noise=*/true));
  REQUIRE(run_cli(dir, "simulate --config " + dir.file("sim.json") +
                           " --out " + dir.file("traj.csv"))
              .exit_code == 0);
  const json tcfg = test_config({100}, 0.5, 2, 1, 100, 4);
  spit(dir.file("test.json"), tcfg.dump(2) + "\n");
  const auto r = run_cli(dir, "test --config " + dir.file("test.json") +
                                  " --data " + dir.file("traj.csv") +
                                  " --out " + dir.file("report.json"));
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(slurp(dir.file("report.json")));
  CHECK(report.at("status").get<std::string>() == "not_rejected");
  REQUIRE(report.at("stages").size() == 1);
  const json& s = report.at("stages")[0];
  CHECK(s.at("degenerate").get<bool>() == true);
  CHECK(s.at("rejected").get<bool>() == false);
  CHECK(s.at("z").is_null());          // NaN serializes to null
  CHECK(s.at("threshold").is_null());  // +inf serializes to null
}

TEST_CASE("cli: identical arm blocks give a zero statistic, never reject") {
  // Constant state and reward with alternating actions give the two arms
  // identical sufficient statistics, so tau-hat vanishes up to the
  // accumulation roundoff of the interleaved running means (~1e-15).
  TempDir dir("duparm");
  std::vector<seqab::Observation> data;
  Eigen::VectorXd s(1);
  s << 0.5;
  for (int i = 0; i < 40; ++i) {
    seqab::Observation o;
    o.t = i;
    o.s = s;
    o.s_next = s;
    o.a = i % 2;
    o.y = 5.0;
    data.push_back(o);
  }
  seqab::write_trajectory_csv_file(dir.file("traj.csv"), data, 1);
  const json tcfg = test_config({40}, 0.6, 2, 1, 100, 6);
  spit(dir.file("test.json"), tcfg.dump(2) + "\n");
  const auto r = run_cli(dir, "test --config " + dir.file("test.json") +
                                  " --data " + dir.file("traj.csv") +
                                  " --out " + dir.file("report.json"));
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(slurp(dir.file("report.json")));
  CHECK(report.at("status").get<std::string>() == "not_rejected");
  REQUIRE(report.at("stages").size() == 1);
  const json& st = report.at("stages")[0];
  CHECK(st.at("rejected").get<bool>() == false);
  if (!st.at("degenerate").get<bool>()) {
    CHECK(std::abs(st.at("z").get<double>()) <= 1e-4);
    CHECK(std::abs(st.at("tau_hat").get<double>()) <= 1e-12);
  }
}

TEST_CASE("cli: config and input errors exit with code 2") {
  TempDir dir("errors");

  SUBCASE("unknown config key names the offending path") {
    json bad = json::parse(simulate_config("example1", 0.0, 10, 1));
    bad["env"]["bogus"] = 1;
    spit(dir.file("bad.json"), bad.dump());
    const auto r = run_cli(dir, "simulate --config " + dir.file("bad.json") +
                                    " --out " + dir.file("x.csv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("env.bogus") != std::string::npos);
    CHECK(r.err.find("unknown key") != std::string::npos);
  }

  SUBCASE("missing config file") {
    const auto r = run_cli(dir, "simulate --config " + dir.file("nope.json") +
                                    " --out " + dir.file("x.csv"));
    CHECK(r.exit_code == 2);
  }

  SUBCASE("config that is not json") {
    spit(dir.file("garbage.json"), "not json at all{{{");
    const auto r = run_cli(dir, "simulate --config " + dir.file("garbage.json") +
                                    " --out " + dir.file("x.csv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("error:") != std::string::npos);
  }

  SUBCASE("malformed trajectory csv") {
    spit(dir.file("bad.csv"), "t,s1,a,y\n0,0.0,zero,1.0\n");
    spit(dir.file("test.json"),
         test_config({1}, 0.5, 1, 1, 100, 1).dump());
    const auto r = run_cli(dir, "test --config " + dir.file("test.json") +
                                    " --data " + dir.file("bad.csv") +
                                    " --out " + dir.file("r.json"));
    CHECK(r.exit_code == 2);
  }

  SUBCASE("state dimension mismatch between csv and estimator") {
    spit(dir.file("sim.json"), simulate_config("main_sim", 0.0, 20, 1));
    REQUIRE(run_cli(dir, "simulate --config " + dir.file("sim.json") +
                             " --out " + dir.file("traj.csv"))
                .exit_code == 0);
    spit(dir.file("test.json"),
         test_config({20}, 0.5, 1, 1, 100, 1).dump());
    const auto r = run_cli(dir, "test --config " + dir.file("test.json") +
                                    " --data " + dir.file("traj.csv") +
                                    " --out " + dir.file("r.json"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("state_dim") != std::string::npos);
  }

  SUBCASE("missing subcommand") {
    const auto r = run_cli(dir, "");
    CHECK(r.exit_code == 2);
  }

  SUBCASE("workers below one") {
    json cfg;
    cfg["env"]["kind"] = "example1";
    cfg["design"]["kind"] = "markov";
    cfg["plan"]["stage_times"] = {20};
    cfg["plan"]["bootstrap_b"] = 50;
    cfg["estimator"]["gamma"] = 0.5;
    cfg["estimator"]["basis"]["degree"] = 1;
    cfg["estimator"]["basis"]["state_dim"] = 1;
    cfg["replications"] = 1;
    cfg["methods"] = {"proposed"};
    cfg["delta_grid"] = {0.0};
    spit(dir.file("exp.json"), cfg.dump());
    const auto r = run_cli(dir, "experiment --config " + dir.file("exp.json") +
                                    " --workers 0 --out-dir " +
                                    dir.file("outdir"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("workers") != std::string::npos);
  }
}

TEST_CASE("cli: experiment writes a rejection table and summary") {
  TempDir dir("experiment");
  json cfg;
  cfg["env"]["kind"] = "example1";
  cfg["env"]["delta"] = 0.0;
  cfg["design"]["kind"] = "markov";
  cfg["design"]["p"] = 0.5;
  cfg["plan"]["stage_times"] = {40, 80};
  cfg["plan"]["alpha"] = 0.05;
  cfg["plan"]["bootstrap_b"] = 100;
  cfg["estimator"]["gamma"] = 0.5;
  cfg["estimator"]["basis"]["degree"] = 1;
  cfg["estimator"]["basis"]["state_dim"] = 1;
  cfg["replications"] = 2;
  cfg["methods"] = {"proposed", "ttest"};
  cfg["delta_grid"] = {0.0, 2.0};
  cfg["seed"] = 33;
  cfg["workers"] = 1;
  cfg["g_samples"] = 500;
  spit(dir.file("exp.json"), cfg.dump(2) + "\n");

  const auto r = run_cli(dir, "experiment --config " + dir.file("exp.json") +
                                  " --out-dir " + dir.file("out1"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("rejections.csv") != std::string::npos);

  const std::string csv = slurp(dir.file("out1/rejections.csv"));
  CHECK(csv.rfind("method,delta,stage,T_k,freq,mce,alpha_spend\n", 0) == 0);
  // 2 deltas x (2 stages per method x 2 methods) data rows.
  size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 2 * 4);

  const json summary = json::parse(slurp(dir.file("out1/summary.json")));
  CHECK(summary.at("replications").get<int>() == 2);
  CHECK(summary.at("tables").contains("proposed"));
  CHECK(summary.at("tables").contains("ttest"));
  CHECK(summary.at("tables").at("proposed").size() == 4);
  CHECK(summary.at("failures").contains("proposed"));
  CHECK(summary.at("config").at("seed").get<std::uint64_t>() == 33);
  for (const auto& row : summary.at("tables").at("proposed")) {
    const double freq = row.at("freq").get<double>();
    CHECK(freq >= 0.0);
    CHECK(freq <= 1.0);
  }

  // The worker count must not change the results.
  const auto r4 = run_cli(dir, "experiment --config " + dir.file("exp.json") +
                                   " --workers 4 --out-dir " +
                                   dir.file("out4"));
  REQUIRE(r4.exit_code == 0);
  CHECK(slurp(dir.file("out1/rejections.csv")) ==
        slurp(dir.file("out4/rejections.csv")));

  // Seed override flows into the summary and the table.
  const auto r5 = run_cli(dir, "experiment --config " + dir.file("exp.json") +
                                   " --seed 77 --out-dir " + dir.file("out5"));
  REQUIRE(r5.exit_code == 0);
  const json summary5 = json::parse(slurp(dir.file("out5/summary.json")));
  CHECK(summary5.at("config").at("seed").get<std::uint64_t>() == 77);
}
