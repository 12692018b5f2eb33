#pragma once
// Synthetic Markov-chain environments with carryover treatment effects,
// treatment-allocation designs, and a block-randomized crossover sampler.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "seqab/basis.hpp"
#include "seqab/estimator.hpp"
#include "seqab/rng.hpp"

namespace seqab {

// Generative model for a single trajectory. `delta` is the carryover
// strength; delta = 0 makes the two arms behave identically.
struct EnvSpec {
  enum class Kind {
    example1,  // d=1: fresh state each step, reward shifted by the action
    example2,  // d=1: AR(1) state carries the action; reward = current state
    main_sim,  // d=2: coupled pair of states driven by the action
  };
  Kind kind = Kind::main_sim;
  double delta = 0.0;
  // 0 means environment noise derives from the simulation seed; a nonzero
  // value pins the noise path so designs can be varied on shared noise.
  std::uint64_t noise_seed = 0;
  bool zero_noise = false;                    // test hook: all noise == 0
  std::optional<Eigen::VectorXd> init_state;  // test hook: fixed S_0

  int state_dim() const;
  void validate() const;
};

// Treatment-allocation rule.
struct DesignPolicy {
  enum class Kind {
    markov,       // A_t iid Bernoulli(p)
    alternating,  // A_0=0, A_1=1, A_2=0, ...
    adaptive,     // epsilon-greedy on the fitted value-difference score
  };
  Kind kind = Kind::markov;
  double p = 0.5;         // markov
  double epsilon = 0.1;   // adaptive
  // Adaptive refit boundaries for standalone simulation; unused when a
  // driver supplies coefficients externally.
  std::vector<std::int64_t> stage_times;

  void validate() const;
};

// Paired-block crossover layout: 2n blocks of block_size steps each; the
// first block of each pair is randomized, the second gets the other arm.
struct CrossoverSpec {
  int n = 10;
  std::int64_t block_size = 30;
  EnvSpec env;

  void validate() const;
};

// Stateful single-trajectory generator. Environment noise, the initial
// state, and action randomization use separate seed channels so that
// changing the design (or forcing actions) never perturbs the noise path.
class TrajectorySimulator {
 public:
  TrajectorySimulator(const EnvSpec& env, const DesignPolicy& design,
                      std::uint64_t seed);

  // Advance one step, drawing the action from the design.
  Observation step();
  // Advance one step with the action overridden (crossover blocks, tests).
  Observation step(int forced_action);

  // Install coefficients for the adaptive score; the probability stays
  // fixed until the next call. Before the first call the adaptive design
  // randomizes with probability 1/2.
  void set_stage_coefficients(const CoefficientEstimate& beta,
                              const BasisSpec& basis);

  // Probability the next drawn action is 1 given the current state.
  double action_prob() const;

  int state_dim() const { return env_.state_dim(); }
  std::int64_t t() const { return t_; }
  const Eigen::VectorXd& state() const { return s_; }

 private:
  Observation advance(int a);
  int draw_action();

  EnvSpec env_;
  DesignPolicy design_;
  Rng state_noise_;
  Rng reward_noise_;
  Rng action_rng_;
  Eigen::VectorXd s_;
  std::int64_t t_ = 0;
  bool have_coeffs_ = false;
  Eigen::VectorXd w_diff_;
  BasisSpec score_basis_;
};

// One draw from the environment's initial-state distribution (honors
// init_state and zero_noise overrides). The simulator itself and any
// reference-distribution sampling share this definition.
Eigen::VectorXd draw_initial_state(const EnvSpec& env, Rng& rng);

// Generate a trajectory of exactly t_total observations. The adaptive
// design requires `coupled`: coefficients are refit from the trajectory so
// far at each design.stage_times boundary.
std::vector<Observation> simulate(
    const EnvSpec& env, const DesignPolicy& design, std::int64_t t_total,
    std::uint64_t seed,
    const std::optional<EstimatorConfig>& coupled = std::nullopt);

// Generate 2n blocks and return (mean reward, treatment) per block in
// time order. The state runs continuously across block boundaries.
std::vector<std::pair<double, double>> simulate_crossover(
    const CrossoverSpec& spec, std::uint64_t seed);

}  // namespace seqab
