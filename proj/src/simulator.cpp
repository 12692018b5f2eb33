#include "seqab/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "seqab/errors.hpp"

namespace seqab {

namespace {

// Seed-channel tags; keep stable so trajectories are reproducible across
// versions.
constexpr std::uint64_t kChInit = 0x11;
constexpr std::uint64_t kChState = 0x22;
constexpr std::uint64_t kChReward = 0x33;
constexpr std::uint64_t kChAction = 0x44;
constexpr std::uint64_t kChCrossover = 0x55;

}  // namespace

int EnvSpec::state_dim() const {
  return kind == Kind::main_sim ? 2 : 1;
}

void EnvSpec::validate() const {
  if (!std::isfinite(delta))
    throw std::invalid_argument("env: delta must be finite");
  if (init_state && init_state->size() != state_dim())
    throw std::invalid_argument("env: init_state dimension mismatch");
}

void DesignPolicy::validate() const {
  if (kind == Kind::markov && !(p > 0.0 && p < 1.0))
    throw std::invalid_argument("design: markov p must be in (0,1)");
  if (kind == Kind::adaptive && !(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("design: adaptive epsilon must be in (0,1)");
  std::int64_t prev = 0;
  for (auto t : stage_times) {
    if (t <= prev)
      throw std::invalid_argument(
          "design: stage_times must be strictly increasing and positive");
    prev = t;
  }
}

void CrossoverSpec::validate() const {
  if (n < 1) throw std::invalid_argument("crossover: n must be >= 1");
  if (block_size < 1)
    throw std::invalid_argument("crossover: block_size must be >= 1");
  env.validate();
}

Eigen::VectorXd draw_initial_state(const EnvSpec& env, Rng& rng) {
  env.validate();
  if (env.init_state) return *env.init_state;
  auto draw = [&] { return env.zero_noise ? 0.0 : rng.normal(); };
  Eigen::VectorXd s(env.state_dim());
  if (env.kind == EnvSpec::Kind::main_sim) {
    s(0) = 0.25 * draw();
    s(1) = 0.25 * draw();
  } else {
    s(0) = 0.5 * draw();
  }
  return s;
}

TrajectorySimulator::TrajectorySimulator(const EnvSpec& env,
                                         const DesignPolicy& design,
                                         std::uint64_t seed)
    : env_(env),
      design_(design),
      state_noise_(0),
      reward_noise_(0),
      action_rng_(0) {
  env_.validate();
  design_.validate();
  const std::uint64_t noise_base =
      env_.noise_seed != 0 ? env_.noise_seed : seed;
  state_noise_ = Rng(mix_seed({noise_base, kChState}));
  reward_noise_ = Rng(mix_seed({noise_base, kChReward}));
  action_rng_ = Rng(mix_seed({seed, kChAction}));
  Rng init_rng(mix_seed({noise_base, kChInit}));
  s_ = draw_initial_state(env_, init_rng);
}

double TrajectorySimulator::action_prob() const {
  switch (design_.kind) {
    case DesignPolicy::Kind::markov:
      return design_.p;
    case DesignPolicy::Kind::alternating:
      return (t_ % 2 == 1) ? 1.0 : 0.0;
    case DesignPolicy::Kind::adaptive: {
      if (!have_coeffs_) return 0.5;
      const double score = basis_eval(score_basis_, s_).dot(w_diff_);
      return design_.epsilon / 2.0 +
             (1.0 - design_.epsilon) * (score > 0.0 ? 1.0 : 0.0);
    }
  }
  throw std::logic_error("design: unknown kind");
}

int TrajectorySimulator::draw_action() {
  if (design_.kind == DesignPolicy::Kind::alternating)
    return static_cast<int>(t_ % 2);
  return action_rng_.bernoulli(action_prob()) ? 1 : 0;
}

Observation TrajectorySimulator::step() { return advance(draw_action()); }

Observation TrajectorySimulator::step(int forced_action) {
  if (forced_action != 0 && forced_action != 1)
    throw std::invalid_argument("step: action must be 0 or 1");
  // Keep the action stream aligned with the unforced path.
  if (design_.kind != DesignPolicy::Kind::alternating)
    action_rng_.uniform();
  return advance(forced_action);
}

Observation TrajectorySimulator::advance(int a) {
  Observation obs;
  obs.t = t_;
  obs.s = s_;
  obs.a = a;
  auto noise = [&](Rng& rng, double sd) {
    return env_.zero_noise ? 0.0 : sd * rng.normal();
  };
  Eigen::VectorXd next(s_.size());
  switch (env_.kind) {
    case EnvSpec::Kind::example1:
      obs.y = s_(0) + env_.delta * a;
      next(0) = 0.5 * noise(state_noise_, 1.0);
      break;
    case EnvSpec::Kind::example2:
      obs.y = s_(0);
      next(0) = 0.5 * s_(0) + env_.delta * a + 0.5 * noise(state_noise_, 1.0);
      break;
    case EnvSpec::Kind::main_sim: {
      obs.y = 1.0 + 0.5 * (s_(0) + s_(1)) + noise(reward_noise_, 0.3);
      const double e1 = noise(state_noise_, 0.5);
      const double e2 = noise(state_noise_, 0.5);
      const double flip = 2.0 * a - 1.0;
      next(0) = flip * s_(0) / 2.0 + s_(1) / 4.0 + env_.delta * a + e1;
      next(1) = flip * s_(1) / 2.0 + s_(0) / 4.0 + env_.delta * a + e2;
      break;
    }
  }
  obs.s_next = next;
  s_ = std::move(next);
  ++t_;
  return obs;
}

void TrajectorySimulator::set_stage_coefficients(const CoefficientEstimate& beta,
                                                 const BasisSpec& basis) {
  if (basis.state_dim != env_.state_dim())
    throw std::invalid_argument(
        "set_stage_coefficients: basis dimension does not match the environment");
  if (beta.beta0.size() != basis.q() || beta.beta1.size() != basis.q())
    throw std::invalid_argument(
        "set_stage_coefficients: coefficient size does not match the basis");
  w_diff_ = beta.beta1 - beta.beta0;
  score_basis_ = basis;
  have_coeffs_ = true;
}

std::vector<Observation> simulate(
    const EnvSpec& env, const DesignPolicy& design, std::int64_t t_total,
    std::uint64_t seed, const std::optional<EstimatorConfig>& coupled) {
  if (t_total < 0)
    throw std::invalid_argument("simulate: length must be nonnegative");
  const bool adaptive = design.kind == DesignPolicy::Kind::adaptive;
  if (adaptive && !coupled)
    throw std::invalid_argument(
        "simulate: adaptive design requires a coupled estimator");
  if (coupled) coupled->validate();

  TrajectorySimulator sim(env, design, seed);
  std::vector<Observation> out;
  out.reserve(static_cast<size_t>(t_total));

  SuffStats stats(coupled ? coupled->basis.q() : 1);
  std::vector<Observation> pending;
  size_t next_stage = 0;
  for (std::int64_t t = 0; t < t_total; ++t) {
    Observation obs = sim.step();
    if (adaptive) pending.push_back(obs);
    out.push_back(std::move(obs));
    if (adaptive && next_stage < design.stage_times.size() &&
        t + 1 == design.stage_times[next_stage]) {
      update_suff_stats(stats, pending, *coupled);
      pending.clear();
      try {
        const CoefficientEstimate beta = estimate_beta(stats, *coupled);
        sim.set_stage_coefficients(beta, coupled->basis);
      } catch (const NumericalError&) {
        // Unfittable stage: keep the previous allocation rule.
      }
      ++next_stage;
    }
  }
  return out;
}

std::vector<std::pair<double, double>> simulate_crossover(
    const CrossoverSpec& spec, std::uint64_t seed) {
  spec.validate();
  DesignPolicy forced;  // actions are overridden below
  forced.kind = DesignPolicy::Kind::markov;
  forced.p = 0.5;
  TrajectorySimulator sim(spec.env, forced, seed);
  Rng alloc(mix_seed({seed, kChCrossover}));

  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<size_t>(2 * spec.n));
  int treat = 0;
  for (int j = 0; j < 2 * spec.n; ++j) {
    treat = (j % 2 == 0) ? (alloc.bernoulli(0.5) ? 1 : 0) : 1 - treat;
    double sum = 0.0;
    for (std::int64_t i = 0; i < spec.block_size; ++i)
      sum += sim.step(treat).y;
    out.emplace_back(sum / static_cast<double>(spec.block_size),
                     static_cast<double>(treat));
  }
  return out;
}

}  // namespace seqab
