#include "seqab/config.hpp"

#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "seqab/rng.hpp"

namespace seqab {

namespace {

using nlohmann::json;

constexpr std::uint64_t kChReference = 0x105;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

json parse_text(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw std::invalid_argument("config: not valid JSON");
  return j;
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

bool has(const json& j, const char* key) { return j.contains(key); }

double get_double(const json& j, const std::string& path, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double get_double_or(const json& j, const std::string& path, const char* key,
                     double fallback) {
  return has(j, key) ? get_double(j, path, key) : fallback;
}

std::int64_t get_int(const json& j, const std::string& path, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t get_int_or(const json& j, const std::string& path,
                        const char* key, std::int64_t fallback) {
  return has(j, key) ? get_int(j, path, key) : fallback;
}

std::uint64_t get_seed_or(const json& j, const std::string& path,
                          const char* key, std::uint64_t fallback) {
  if (!has(j, key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    fail(path + "." + key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool get_bool_or(const json& j, const std::string& path, const char* key,
                 bool fallback) {
  if (!has(j, key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const std::string& path,
                       const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

EnvSpec parse_env(const json& j, const std::string& path) {
  check_keys(j, path,
             {"kind", "delta", "noise_seed", "zero_noise", "init_state"});
  if (!has(j, "kind")) fail(path + ".kind", "required");
  EnvSpec env;
  const std::string kind = get_string(j, path, "kind");
  if (kind == "example1")
    env.kind = EnvSpec::Kind::example1;
  else if (kind == "example2")
    env.kind = EnvSpec::Kind::example2;
  else if (kind == "main_sim")
    env.kind = EnvSpec::Kind::main_sim;
  else
    fail(path + ".kind", "must be example1, example2, or main_sim");
  env.delta = get_double_or(j, path, "delta", 0.0);
  env.noise_seed = get_seed_or(j, path, "noise_seed", 0);
  env.zero_noise = get_bool_or(j, path, "zero_noise", false);
  if (has(j, "init_state"))
    env.init_state = get_vector(j.at("init_state"), path + ".init_state");
  env.validate();
  return env;
}

DesignPolicy parse_design(const json& j, const std::string& path) {
  if (!has(require_object(j, path), "kind")) fail(path + ".kind", "required");
  DesignPolicy design;
  const std::string kind = get_string(j, path, "kind");
  if (kind == "markov") {
    check_keys(j, path, {"kind", "p"});
    design.kind = DesignPolicy::Kind::markov;
    design.p = get_double_or(j, path, "p", 0.5);
  } else if (kind == "alternating") {
    check_keys(j, path, {"kind"});
    design.kind = DesignPolicy::Kind::alternating;
  } else if (kind == "adaptive") {
    check_keys(j, path, {"kind", "epsilon", "stage_times"});
    design.kind = DesignPolicy::Kind::adaptive;
    design.epsilon = get_double_or(j, path, "epsilon", 0.1);
    if (has(j, "stage_times")) {
      const auto& st = j.at("stage_times");
      if (!st.is_array()) fail(path + ".stage_times", "expected an array");
      for (size_t i = 0; i < st.size(); ++i) {
        if (!st[i].is_number_integer() && !st[i].is_number_unsigned())
          fail(path + ".stage_times[" + std::to_string(i) + "]",
               "expected an integer");
        design.stage_times.push_back(st[i].get<std::int64_t>());
      }
    }
  } else {
    fail(path + ".kind", "must be markov, alternating, or adaptive");
  }
  design.validate();
  return design;
}

BasisSpec parse_basis(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "degree", "state_dim"});
  BasisSpec basis;
  const std::string kind =
      has(j, "kind") ? get_string(j, path, "kind") : "polynomial";
  if (kind == "polynomial")
    basis.kind = BasisSpec::Kind::polynomial;
  else if (kind == "constant")
    basis.kind = BasisSpec::Kind::constant;
  else
    fail(path + ".kind", "must be polynomial or constant");
  basis.degree = static_cast<int>(get_int_or(j, path, "degree", 4));
  if (!has(j, "state_dim")) fail(path + ".state_dim", "required");
  basis.state_dim = static_cast<int>(get_int(j, path, "state_dim"));
  basis.validate();
  return basis;
}

EstimatorConfig parse_estimator(const json& j, const std::string& path) {
  check_keys(j, path, {"gamma", "basis", "ridge_epsilon"});
  EstimatorConfig cfg;
  if (!has(j, "gamma")) fail(path + ".gamma", "required");
  cfg.gamma = get_double(j, path, "gamma");
  if (!has(j, "basis")) fail(path + ".basis", "required");
  cfg.basis = parse_basis(j.at("basis"), path + ".basis");
  cfg.ridge_epsilon = get_double_or(j, path, "ridge_epsilon", 1e-8);
  cfg.validate();
  return cfg;
}

SequentialPlan parse_plan(const json& j, const std::string& path) {
  check_keys(j, path,
             {"stage_times", "alpha", "spending", "bootstrap_b", "seed"});
  SequentialPlan plan;
  if (!has(j, "stage_times")) fail(path + ".stage_times", "required");
  const auto& st = j.at("stage_times");
  if (!st.is_array()) fail(path + ".stage_times", "expected an array");
  for (size_t i = 0; i < st.size(); ++i) {
    if (!st[i].is_number_integer() && !st[i].is_number_unsigned())
      fail(path + ".stage_times[" + std::to_string(i) + "]",
           "expected an integer");
    plan.stage_times.push_back(st[i].get<std::int64_t>());
  }
  plan.alpha = get_double_or(j, path, "alpha", 0.05);
  if (has(j, "spending")) {
    const auto& sp = j.at("spending");
    const std::string sp_path = path + ".spending";
    if (!has(require_object(sp, sp_path), "kind"))
      fail(sp_path + ".kind", "required");
    const std::string kind = get_string(sp, sp_path, "kind");
    if (kind == "obrien_fleming") {
      check_keys(sp, sp_path, {"kind"});
      plan.spending = SequentialPlan::Spending::obrien_fleming;
    } else if (kind == "power") {
      check_keys(sp, sp_path, {"kind", "theta"});
      plan.spending = SequentialPlan::Spending::power;
      plan.theta = get_double_or(sp, sp_path, "theta", 3.0);
    } else {
      fail(sp_path + ".kind", "must be obrien_fleming or power");
    }
  }
  plan.bootstrap_b = static_cast<int>(get_int_or(j, path, "bootstrap_b", 1000));
  plan.seed = get_seed_or(j, path, "seed", 0);
  plan.validate();
  return plan;
}

ReferenceSpec parse_reference(const json& j, const std::string& path) {
  if (!has(require_object(j, path), "kind")) fail(path + ".kind", "required");
  ReferenceSpec ref;
  const std::string kind = get_string(j, path, "kind");
  if (kind == "point_mass") {
    check_keys(j, path, {"kind", "state"});
    ref.kind = ReferenceSpec::Kind::point_mass;
    if (!has(j, "state")) fail(path + ".state", "required");
    ref.state = get_vector(j.at("state"), path + ".state");
  } else if (kind == "sample_set") {
    check_keys(j, path, {"kind", "states"});
    ref.kind = ReferenceSpec::Kind::sample_set;
    if (!has(j, "states")) fail(path + ".states", "required");
    const auto& states = j.at("states");
    if (!states.is_array() || states.empty())
      fail(path + ".states", "expected a non-empty array");
    for (size_t i = 0; i < states.size(); ++i)
      ref.states.push_back(get_vector(
          states[i], path + ".states[" + std::to_string(i) + "]"));
  } else if (kind == "env_initial") {
    check_keys(j, path, {"kind", "env", "samples"});
    ref.kind = ReferenceSpec::Kind::env_initial;
    if (!has(j, "env")) fail(path + ".env", "required");
    ref.env = parse_env(j.at("env"), path + ".env");
    ref.samples = static_cast<int>(get_int_or(
        j, path, "samples", ReferenceDistribution::default_sample_count));
    if (ref.samples < 1) fail(path + ".samples", "must be >= 1");
  } else {
    fail(path + ".kind", "must be point_mass, sample_set, or env_initial");
  }
  return ref;
}

}  // namespace

ReferenceDistribution resolve_reference(const ReferenceSpec& spec,
                                        std::uint64_t seed) {
  ReferenceDistribution ref;
  switch (spec.kind) {
    case ReferenceSpec::Kind::point_mass:
      ref.kind = ReferenceDistribution::Kind::point_mass;
      ref.point = spec.state;
      break;
    case ReferenceSpec::Kind::sample_set:
      ref.kind = ReferenceDistribution::Kind::sample_set;
      ref.samples = spec.states;
      break;
    case ReferenceSpec::Kind::env_initial: {
      ref.kind = ReferenceDistribution::Kind::sample_set;
      Rng rng(mix_seed({seed, kChReference}));
      ref.samples.reserve(static_cast<size_t>(spec.samples));
      for (int i = 0; i < spec.samples; ++i)
        ref.samples.push_back(draw_initial_state(spec.env, rng));
      break;
    }
  }
  return ref;
}

SimulateJob parse_simulate_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  check_keys(j, "", {"env", "design", "length", "seed", "coupled_estimator"});
  SimulateJob job;
  if (!has(j, "env")) fail("env", "required");
  job.env = parse_env(j.at("env"), "env");
  if (!has(j, "design")) fail("design", "required");
  job.design = parse_design(j.at("design"), "design");
  if (!has(j, "length")) fail("length", "required");
  job.length = get_int(j, "", "length");
  if (job.length < 0) fail("length", "must be >= 0");
  job.seed = get_seed_or(j, "", "seed", 0);
  if (has(j, "coupled_estimator"))
    job.coupled = parse_estimator(j.at("coupled_estimator"), "coupled_estimator");
  if (job.design.kind == DesignPolicy::Kind::adaptive && !job.coupled)
    fail("coupled_estimator", "required for the adaptive design");
  if (job.coupled && job.coupled->basis.state_dim != job.env.state_dim())
    fail("coupled_estimator.basis.state_dim",
         "does not match the environment");
  return job;
}

TestJob parse_test_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  check_keys(j, "", {"estimator", "plan", "reference"});
  TestJob job;
  if (!has(j, "estimator")) fail("estimator", "required");
  job.estimator = parse_estimator(j.at("estimator"), "estimator");
  if (!has(j, "plan")) fail("plan", "required");
  job.plan = parse_plan(j.at("plan"), "plan");
  if (!has(j, "reference")) fail("reference", "required");
  job.reference = parse_reference(j.at("reference"), "reference");
  return job;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  check_keys(j, "",
             {"env", "design", "plan", "estimator", "replications", "methods",
              "delta_grid", "seed", "workers", "crossover", "g_samples"});
  ExperimentConfig cfg;
  if (!has(j, "env")) fail("env", "required");
  cfg.env = parse_env(j.at("env"), "env");
  if (!has(j, "design")) fail("design", "required");
  cfg.design = parse_design(j.at("design"), "design");
  if (!has(j, "plan")) fail("plan", "required");
  cfg.plan = parse_plan(j.at("plan"), "plan");
  if (!has(j, "estimator")) fail("estimator", "required");
  cfg.estimator = parse_estimator(j.at("estimator"), "estimator");
  if (!has(j, "replications")) fail("replications", "required");
  cfg.replications = static_cast<int>(get_int(j, "", "replications"));
  if (!has(j, "methods")) fail("methods", "required");
  const auto& methods = j.at("methods");
  if (!methods.is_array() || methods.empty())
    fail("methods", "expected a non-empty array");
  cfg.methods.clear();
  for (size_t i = 0; i < methods.size(); ++i) {
    if (!methods[i].is_string())
      fail("methods[" + std::to_string(i) + "]", "expected a string");
    try {
      cfg.methods.push_back(method_from_name(methods[i].get<std::string>()));
    } catch (const std::invalid_argument&) {
      fail("methods[" + std::to_string(i) + "]",
           "must be proposed, ttest, obf, or crossover");
    }
  }
  if (!has(j, "delta_grid")) fail("delta_grid", "required");
  const auto& grid = j.at("delta_grid");
  if (!grid.is_array() || grid.empty())
    fail("delta_grid", "expected a non-empty array");
  cfg.delta_grid.clear();
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!grid[i].is_number())
      fail("delta_grid[" + std::to_string(i) + "]", "expected a number");
    cfg.delta_grid.push_back(grid[i].get<double>());
  }
  cfg.seed = get_seed_or(j, "", "seed", 1);
  cfg.workers = static_cast<int>(get_int_or(j, "", "workers", 1));
  if (has(j, "crossover")) {
    const auto& cr = j.at("crossover");
    check_keys(cr, "crossover", {"n", "block_size"});
    cfg.crossover_n = static_cast<int>(get_int_or(cr, "crossover", "n", 10));
    cfg.crossover_block = get_int_or(cr, "crossover", "block_size", 30);
  }
  cfg.g_samples = static_cast<int>(get_int_or(
      j, "", "g_samples", ReferenceDistribution::default_sample_count));
  cfg.validate();
  return cfg;
}

}  // namespace seqab
