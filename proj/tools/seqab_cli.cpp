// seqab: sequential A/B testing of long-run treatment effects on streaming
// Markov-chain data. Subcommands: simulate (generate trajectory CSVs),
// test (run the sequential test over a CSV), experiment (replicated
// Monte-Carlo power/size tables).
//
// Exit codes: 0 = completed (whatever the decision), 2 = validation or
// input error, 3 = numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqab/config.hpp"
#include "seqab/csv.hpp"
#include "seqab/errors.hpp"
#include "seqab/harness.hpp"
#include "seqab/sequential.hpp"
#include "seqab/simulator.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

json stage_to_json(const seqab::StageSnapshot& s) {
  json j;
  j["k"] = s.k;
  j["T_k"] = s.t_k;
  j["tau_hat"] = s.tau_hat;
  j["sigma_hat"] = s.sigma_hat;
  j["z"] = s.z_stat;
  j["threshold"] = s.threshold;
  j["rejected"] = s.rejected;
  j["spending_consumed"] = s.spending_consumed;
  j["degenerate"] = s.degenerate;
  j["ridge_used"] = s.ridge_used;
  return j;
}

struct SimulateArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

struct TestArgs {
  std::string config, data, out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

struct ExperimentArgs {
  std::string config, out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  bool workers_given = false;
};

int run_simulate(const SimulateArgs& args) {
  const std::string text = read_file(args.config);
  seqab::SimulateJob job = seqab::parse_simulate_config(text);
  if (args.seed_given) job.seed = args.seed;
  const auto observations =
      seqab::simulate(job.env, job.design, job.length, job.seed, job.coupled);
  seqab::write_trajectory_csv_file(args.out, observations,
                                   job.env.state_dim());
  json sidecar = json::parse(text);
  sidecar["seed"] = job.seed;
  write_file(args.out + ".json", sidecar.dump(2) + "\n");
  std::cout << "wrote " << args.out << " (" << observations.size()
            << " observations)\n";
  return 0;
}

int run_test(const TestArgs& args) {
  seqab::TestJob job = seqab::parse_test_config(read_file(args.config));
  if (args.seed_given) job.plan.seed = args.seed;
  const seqab::Trajectory traj = seqab::read_trajectory_csv_file(args.data);
  if (traj.state_dim != job.estimator.basis.state_dim)
    throw std::invalid_argument(
        "data state dimension (" + std::to_string(traj.state_dim) +
        ") does not match estimator.basis.state_dim (" +
        std::to_string(job.estimator.basis.state_dim) + ")");
  const seqab::ReferenceDistribution ref =
      seqab::resolve_reference(job.reference, job.plan.seed);
  const seqab::ContrastVector u =
      seqab::compute_contrast(job.estimator.basis, ref);
  const auto n_obs = static_cast<std::int64_t>(traj.observations.size());
  seqab::VectorObservationSource source(traj.observations);
  const auto snaps =
      seqab::run_sequential_test(source, job.plan, job.estimator, u,
                                 /*stop_on_rejection=*/true, n_obs);

  bool rejected = false;
  int decision_stage = 0;
  for (const auto& s : snaps)
    if (s.rejected) {
      rejected = true;
      decision_stage = s.k;
    }
  const bool partial =
      !rejected && (snaps.empty() || snaps.back().k < job.plan.stages());

  json report;
  report["status"] =
      rejected ? "rejected" : (partial ? "partial_data" : "not_rejected");
  if (rejected)
    report["decision_stage"] = decision_stage;
  else
    report["decision_stage"] = nullptr;
  report["planned_stages"] = job.plan.stages();
  report["observations"] = n_obs;
  report["stages"] = json::array();
  for (const auto& s : snaps) report["stages"].push_back(stage_to_json(s));
  write_file(args.out, report.dump(2) + "\n");

  if (rejected) {
    std::cout << "decision: rejected at stage " << decision_stage << " (T_k="
              << snaps.back().t_k << ")\n";
  } else if (partial) {
    std::cout << "decision: not rejected (partial data: " << snaps.size()
              << " of " << job.plan.stages() << " planned stages)\n";
  } else {
    std::cout << "decision: not rejected\n";
  }
  return 0;
}

int run_experiment(const ExperimentArgs& args) {
  const std::string text = read_file(args.config);
  seqab::ExperimentConfig cfg = seqab::parse_experiment_config(text);
  if (args.seed_given) cfg.seed = args.seed;
  if (args.workers_given) {
    if (args.workers < 1)
      throw std::invalid_argument("--workers must be >= 1");
    cfg.workers = args.workers;
  }
  const seqab::RejectionTable table = seqab::run_experiment(cfg);

  std::filesystem::create_directories(args.out_dir);
  const std::string csv_path =
      (std::filesystem::path(args.out_dir) / "rejections.csv").string();
  write_file(csv_path, seqab::emit_plot_data(table, cfg.plan));

  json summary;
  json config_echo = json::parse(text);
  config_echo["seed"] = cfg.seed;
  config_echo["workers"] = cfg.workers;
  summary["config"] = config_echo;
  summary["replications"] = table.replications;
  summary["failures"] = json::object();
  for (const auto& [m, count] : table.failures)
    summary["failures"][seqab::method_name(m)] = count;
  summary["tables"] = json::object();
  for (const auto& row : table.rows) {
    json r;
    r["delta"] = row.delta;
    r["stage"] = row.stage;
    r["T_k"] = row.t_k;
    r["freq"] = row.freq;
    r["mce"] = row.mce;
    summary["tables"][seqab::method_name(row.method)].push_back(r);
  }
  const std::string summary_path =
      (std::filesystem::path(args.out_dir) / "summary.json").string();
  write_file(summary_path, summary.dump(2) + "\n");
  std::cout << "wrote " << csv_path << " and " << summary_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sequential A/B testing of long-run treatment effects on streaming "
      "Markov-chain data"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Generate a trajectory CSV from an environment config");
  sim_cmd->add_option("--config", sim.config, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out, "output CSV path")->required();
  auto* sim_seed = sim_cmd->add_option("--seed", sim.seed, "seed override")
                       ->envname("SEQAB_SEED");

  TestArgs tst;
  auto* test_cmd = app.add_subcommand(
      "test", "Run the sequential test over a trajectory CSV");
  test_cmd->add_option("--config", tst.config, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  test_cmd->add_option("--data", tst.data, "trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  test_cmd->add_option("--out", tst.out, "stage-report JSON path")->required();
  auto* test_seed = test_cmd->add_option("--seed", tst.seed, "seed override")
                        ->envname("SEQAB_SEED");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand(
      "experiment", "Run a replicated Monte-Carlo experiment");
  exp_cmd->add_option("--config", exp.config, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  exp_cmd->add_option("--out-dir", exp.out_dir, "output directory")
      ->required();
  auto* exp_seed = exp_cmd->add_option("--seed", exp.seed, "seed override")
                       ->envname("SEQAB_SEED");
  auto* exp_workers =
      exp_cmd->add_option("--workers", exp.workers, "worker thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  sim.seed_given = sim_seed->count() > 0;
  tst.seed_given = test_seed->count() > 0;
  exp.seed_given = exp_seed->count() > 0;
  exp.workers_given = exp_workers->count() > 0;

  try {
    if (app.got_subcommand(sim_cmd)) return run_simulate(sim);
    if (app.got_subcommand(test_cmd)) return run_test(tst);
    if (app.got_subcommand(exp_cmd)) return run_experiment(exp);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const seqab::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
