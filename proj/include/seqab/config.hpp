#pragma once
// JSON config documents for the command-line tools. Parsing is strict:
// unknown keys are rejected with their full key path, and every numeric
// field is type-checked. Numbers accept decimal and scientific notation
// (standard JSON).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqab/basis.hpp"
#include "seqab/harness.hpp"
#include "seqab/simulator.hpp"

namespace seqab {

// Reference initial-state distribution, unresolved: env_initial defers
// sampling until a seed is available.
struct ReferenceSpec {
  enum class Kind { point_mass, sample_set, env_initial };
  Kind kind = Kind::point_mass;
  Eigen::VectorXd state;                // point_mass
  std::vector<Eigen::VectorXd> states;  // sample_set
  EnvSpec env;                          // env_initial
  int samples = ReferenceDistribution::default_sample_count;
};

ReferenceDistribution resolve_reference(const ReferenceSpec& spec,
                                        std::uint64_t seed);

struct SimulateJob {
  EnvSpec env;
  DesignPolicy design;
  std::int64_t length = 0;
  std::uint64_t seed = 0;
  std::optional<EstimatorConfig> coupled;  // required for adaptive designs
};

struct TestJob {
  EstimatorConfig estimator;
  SequentialPlan plan;
  ReferenceSpec reference;
};

// Parse errors raise std::invalid_argument with the offending key path.
SimulateJob parse_simulate_config(const std::string& json_text);
TestJob parse_test_config(const std::string& json_text);
ExperimentConfig parse_experiment_config(const std::string& json_text);

}  // namespace seqab
