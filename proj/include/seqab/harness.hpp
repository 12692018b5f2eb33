#pragma once
// Monte-Carlo experiment runner: replicated trajectories, the sequential
// test plus baseline comparators on the same data, and rejection-frequency
// tables in long format for plotting.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqab/baselines.hpp"
#include "seqab/estimator.hpp"
#include "seqab/sequential.hpp"
#include "seqab/simulator.hpp"

namespace seqab {

enum class Method { proposed, ttest, obf, crossover };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Streams a live simulator into run_sequential_test, recording the raw
// observations so baseline tests can reuse the identical data stream. For
// adaptive designs the fitted coefficients flow back into the allocation
// rule at each stage boundary.
class SimulatorSource : public ObservationSource {
 public:
  SimulatorSource(const EnvSpec& env, const DesignPolicy& design,
                  std::uint64_t seed, const BasisSpec& basis);

  std::vector<Observation> next_batch(std::int64_t t_begin,
                                      std::int64_t t_end) override;
  void on_stage_complete(int k, const CoefficientEstimate& beta) override;

  const std::vector<Observation>& recorded() const { return recorded_; }

 private:
  TrajectorySimulator sim_;
  BasisSpec basis_;
  bool adaptive_;
  std::vector<Observation> recorded_;
};

struct ExperimentConfig {
  EnvSpec env;
  DesignPolicy design;
  SequentialPlan plan;
  EstimatorConfig estimator;
  int replications = 500;
  std::vector<Method> methods = {Method::proposed};
  std::vector<double> delta_grid = {0.0};
  std::uint64_t seed = 1;
  int workers = 1;
  // Crossover layout; its trajectory is generated separately from the
  // streaming methods.
  int crossover_n = 10;
  std::int64_t crossover_block = 30;
  // Draw count for the reference initial-state distribution behind the
  // contrast vector.
  int g_samples = ReferenceDistribution::default_sample_count;

  void validate() const;
};

struct RejectionTable {
  struct Row {
    Method method;
    double delta = 0.0;
    int stage = 0;
    std::int64_t t_k = 0;
    double freq = 0.0;
    double mce = 0.0;
  };
  // Ordered by (method, delta, stage).
  std::vector<Row> rows;
  // Replication-method evaluations that raised instead of deciding; they
  // count as non-rejections in `rows`.
  std::map<Method, std::int64_t> failures;
  int replications = 0;
};

// Run the full replicated experiment. Deterministic given cfg.seed and
// independent of cfg.workers: each (delta, replication) cell is seeded by
// hashing (seed, replication), so rejection decisions never depend on
// scheduling. Methods share one trajectory per cell except crossover,
// which draws its own blocks. `proposed` and `obf` rows are cumulative
// first-rejection frequencies; `ttest` rows are per-stage fresh tests;
// `crossover` reports a single final decision.
RejectionTable run_experiment(const ExperimentConfig& cfg);

// Long-format CSV (method,delta,stage,T_k,freq,mce,alpha_spend). The
// alpha_spend column evaluates the plan's spending schedule at each row's
// T_k and is left empty for rows outside the schedule's domain.
std::string emit_plot_data(const RejectionTable& table,
                           const SequentialPlan& plan);

}  // namespace seqab
