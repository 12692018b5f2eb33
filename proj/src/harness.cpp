#include "seqab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "seqab/rng.hpp"

namespace seqab {

namespace {

constexpr std::uint64_t kChSim = 0x101;
constexpr std::uint64_t kChBoot = 0x102;
constexpr std::uint64_t kChCross = 0x103;
constexpr std::uint64_t kChContrast = 0x104;

constexpr Method kMethodOrder[] = {Method::proposed, Method::ttest,
                                   Method::obf, Method::crossover};

// Per-(delta, replication) decisions; indexed by the Method enum value.
// Streaming methods hold one flag per stage, crossover holds one flag.
struct ItemResult {
  std::vector<std::uint8_t> flags[4];
  std::uint8_t failed[4] = {0, 0, 0, 0};
};

int midx(Method m) { return static_cast<int>(m); }

bool wants(const ExperimentConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) !=
         cfg.methods.end();
}

std::vector<std::uint8_t> cumulative_from_first(
    const std::vector<std::uint8_t>& marginal) {
  std::vector<std::uint8_t> out(marginal.size(), 0);
  bool hit = false;
  for (size_t i = 0; i < marginal.size(); ++i) {
    hit = hit || marginal[i] != 0;
    out[i] = hit ? 1 : 0;
  }
  return out;
}

ItemResult run_item(const ExperimentConfig& cfg, const ContrastVector& u,
                    double delta, int rep) {
  ItemResult res;
  const int k_stages = cfg.plan.stages();
  const std::int64_t horizon = cfg.plan.horizon();
  const std::uint64_t rep_seed =
      mix_seed({cfg.seed, static_cast<std::uint64_t>(rep)});
  EnvSpec env = cfg.env;
  env.delta = delta;

  const bool want_stream = wants(cfg, Method::proposed) ||
                           wants(cfg, Method::ttest) || wants(cfg, Method::obf);
  if (want_stream) {
    SequentialPlan plan = cfg.plan;
    plan.seed = mix_seed({rep_seed, kChBoot});
    SimulatorSource source(env, cfg.design, mix_seed({rep_seed, kChSim}),
                           cfg.estimator.basis);
    std::vector<StageSnapshot> snaps;
    bool engine_ok = true;
    try {
      snaps = run_sequential_test(source, plan, cfg.estimator, u,
                                  /*stop_on_rejection=*/false);
    } catch (const std::exception&) {
      engine_ok = false;
    }
    if (wants(cfg, Method::proposed)) {
      auto& f = res.flags[midx(Method::proposed)];
      f.assign(static_cast<size_t>(k_stages), 0);
      if (engine_ok) {
        std::vector<std::uint8_t> marginal(static_cast<size_t>(k_stages), 0);
        for (const auto& s : snaps)
          if (s.rejected) marginal[static_cast<size_t>(s.k - 1)] = 1;
        f = cumulative_from_first(marginal);
      } else {
        res.failed[midx(Method::proposed)] = 1;
      }
    }

    const auto& data = source.recorded();
    const bool full_stream =
        static_cast<std::int64_t>(data.size()) == horizon;
    if (wants(cfg, Method::ttest)) {
      auto& f = res.flags[midx(Method::ttest)];
      f.assign(static_cast<size_t>(k_stages), 0);
      if (full_stream) {
        std::vector<std::pair<int, double>> acc;
        acc.reserve(static_cast<size_t>(horizon));
        size_t pos = 0;
        for (int k = 1; k <= k_stages; ++k) {
          const auto t_k =
              static_cast<size_t>(cfg.plan.stage_times[static_cast<size_t>(k - 1)]);
          for (; pos < t_k; ++pos) acc.emplace_back(data[pos].a, data[pos].y);
          try {
            f[static_cast<size_t>(k - 1)] =
                two_sample_t(acc, cfg.plan.alpha).reject ? 1 : 0;
          } catch (const std::exception&) {
            res.failed[midx(Method::ttest)] = 1;
          }
        }
      } else {
        res.failed[midx(Method::ttest)] = 1;
      }
    }
    if (wants(cfg, Method::obf)) {
      auto& f = res.flags[midx(Method::obf)];
      f.assign(static_cast<size_t>(k_stages), 0);
      if (full_stream) {
        const std::int64_t batch = horizon / k_stages;
        std::vector<std::vector<std::pair<int, double>>> batches(
            static_cast<size_t>(k_stages));
        for (std::int64_t t = 0; t < horizon; ++t)
          batches[static_cast<size_t>(t / batch)].emplace_back(
              data[static_cast<size_t>(t)].a, data[static_cast<size_t>(t)].y);
        try {
          const auto stages = obf_sequential(batches, k_stages, cfg.plan.alpha);
          std::vector<std::uint8_t> marginal(static_cast<size_t>(k_stages), 0);
          for (int k = 0; k < k_stages; ++k)
            marginal[static_cast<size_t>(k)] =
                stages[static_cast<size_t>(k)].reject ? 1 : 0;
          f = cumulative_from_first(marginal);
        } catch (const std::exception&) {
          res.failed[midx(Method::obf)] = 1;
        }
      } else {
        res.failed[midx(Method::obf)] = 1;
      }
    }
  }

  if (wants(cfg, Method::crossover)) {
    auto& f = res.flags[midx(Method::crossover)];
    f.assign(1, 0);
    try {
      CrossoverSpec cs;
      cs.n = cfg.crossover_n;
      cs.block_size = cfg.crossover_block;
      cs.env = env;
      const auto blocks =
          simulate_crossover(cs, mix_seed({rep_seed, kChCross}));
      f[0] = crossover_t(blocks, cfg.plan.alpha).reject ? 1 : 0;
    } catch (const std::exception&) {
      res.failed[midx(Method::crossover)] = 1;
    }
  }
  return res;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::proposed:
      return "proposed";
    case Method::ttest:
      return "ttest";
    case Method::obf:
      return "obf";
    case Method::crossover:
      return "crossover";
  }
  throw std::logic_error("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  for (Method m : kMethodOrder)
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown method: " + name);
}

SimulatorSource::SimulatorSource(const EnvSpec& env, const DesignPolicy& design,
                                 std::uint64_t seed, const BasisSpec& basis)
    : sim_(env, design, seed),
      basis_(basis),
      adaptive_(design.kind == DesignPolicy::Kind::adaptive) {}

std::vector<Observation> SimulatorSource::next_batch(std::int64_t t_begin,
                                                     std::int64_t t_end) {
  if (t_begin != sim_.t())
    throw std::logic_error("SimulatorSource: non-contiguous batch request");
  if (t_end < t_begin)
    throw std::logic_error("SimulatorSource: negative batch");
  std::vector<Observation> batch;
  batch.reserve(static_cast<size_t>(t_end - t_begin));
  for (std::int64_t t = t_begin; t < t_end; ++t) {
    Observation obs = sim_.step();
    recorded_.push_back(obs);
    batch.push_back(std::move(obs));
  }
  return batch;
}

void SimulatorSource::on_stage_complete(int, const CoefficientEstimate& beta) {
  if (adaptive_) sim_.set_stage_coefficients(beta, basis_);
}

void ExperimentConfig::validate() const {
  env.validate();
  design.validate();
  plan.validate();
  estimator.validate();
  if (estimator.basis.state_dim != env.state_dim())
    throw std::invalid_argument(
        "experiment: basis state_dim does not match the environment");
  if (replications < 1)
    throw std::invalid_argument("experiment: replications must be >= 1");
  if (delta_grid.empty())
    throw std::invalid_argument("experiment: delta_grid must be non-empty");
  for (double d : delta_grid)
    if (!std::isfinite(d))
      throw std::invalid_argument("experiment: delta_grid must be finite");
  if (workers < 1)
    throw std::invalid_argument("experiment: workers must be >= 1");
  if (g_samples < 1)
    throw std::invalid_argument("experiment: g_samples must be >= 1");
  if (env.noise_seed != 0)
    throw std::invalid_argument(
        "experiment: env.noise_seed must be 0; per-replication noise is "
        "derived from the experiment seed");
  for (size_t i = 0; i < methods.size(); ++i)
    for (size_t j = i + 1; j < methods.size(); ++j)
      if (methods[i] == methods[j])
        throw std::invalid_argument("experiment: duplicate method");
  if (std::find(methods.begin(), methods.end(), Method::obf) != methods.end() &&
      plan.horizon() % plan.stages() != 0)
    throw std::invalid_argument(
        "experiment: the obf baseline needs the horizon divisible by the "
        "stage count");
  if (std::find(methods.begin(), methods.end(), Method::crossover) !=
      methods.end()) {
    if (crossover_n < 1 || crossover_block < 1)
      throw std::invalid_argument(
          "experiment: crossover layout must be positive");
  }
}

RejectionTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int k_stages = cfg.plan.stages();
  const int reps = cfg.replications;
  const size_t n_deltas = cfg.delta_grid.size();

  // The contrast vector is shared across all replications: it averages the
  // basis over draws from the environment's initial-state distribution.
  Rng g_rng(mix_seed({cfg.seed, kChContrast}));
  ReferenceDistribution ref;
  ref.kind = ReferenceDistribution::Kind::sample_set;
  ref.samples.reserve(static_cast<size_t>(cfg.g_samples));
  for (int i = 0; i < cfg.g_samples; ++i)
    ref.samples.push_back(draw_initial_state(cfg.env, g_rng));
  const ContrastVector u = compute_contrast(cfg.estimator.basis, ref);

  const size_t n_items = n_deltas * static_cast<size_t>(reps);
  std::vector<ItemResult> results(n_items);
  auto eval_item = [&](size_t i) {
    const double delta = cfg.delta_grid[i / static_cast<size_t>(reps)];
    const int rep = static_cast<int>(i % static_cast<size_t>(reps));
    try {
      results[i] = run_item(cfg, u, delta, rep);
    } catch (const std::exception&) {
      // Defensive: run_item already traps per-method errors; a failure
      // here voids every requested method for this replication.
      ItemResult bad;
      for (Method m : kMethodOrder)
        if (wants(cfg, m)) {
          bad.failed[midx(m)] = 1;
          bad.flags[midx(m)].assign(
              m == Method::crossover ? 1 : static_cast<size_t>(k_stages), 0);
        }
      results[i] = bad;
    }
  };

  const int workers =
      static_cast<int>(std::min<size_t>(static_cast<size_t>(cfg.workers), n_items));
  if (workers <= 1) {
    for (size_t i = 0; i < n_items; ++i) eval_item(i);
  } else {
    std::atomic<size_t> next{0};
    auto loop = [&] {
      for (size_t i = next.fetch_add(1); i < n_items; i = next.fetch_add(1))
        eval_item(i);
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }

  RejectionTable table;
  table.replications = reps;
  for (Method m : kMethodOrder) {
    if (!wants(cfg, m)) continue;
    std::int64_t fail_count = 0;
    for (size_t d = 0; d < n_deltas; ++d) {
      const int stages_m = m == Method::crossover ? 1 : k_stages;
      std::vector<std::int64_t> counts(static_cast<size_t>(stages_m), 0);
      for (int rep = 0; rep < reps; ++rep) {
        const ItemResult& r =
            results[d * static_cast<size_t>(reps) + static_cast<size_t>(rep)];
        fail_count += r.failed[midx(m)];
        const auto& f = r.flags[midx(m)];
        for (int s = 0; s < stages_m; ++s)
          counts[static_cast<size_t>(s)] += f[static_cast<size_t>(s)];
      }
      for (int s = 0; s < stages_m; ++s) {
        RejectionTable::Row row;
        row.method = m;
        row.delta = cfg.delta_grid[d];
        const double freq = static_cast<double>(counts[static_cast<size_t>(s)]) /
                            static_cast<double>(reps);
        row.freq = freq;
        row.mce = std::sqrt(freq * (1.0 - freq) / static_cast<double>(reps));
        if (m == Method::crossover) {
          row.stage = k_stages;
          row.t_k = 2 * static_cast<std::int64_t>(cfg.crossover_n) *
                    cfg.crossover_block;
        } else if (m == Method::obf) {
          row.stage = s + 1;
          row.t_k = (cfg.plan.horizon() / k_stages) * (s + 1);
        } else {
          row.stage = s + 1;
          row.t_k = cfg.plan.stage_times[static_cast<size_t>(s)];
        }
        table.rows.push_back(row);
      }
    }
    table.failures[m] = fail_count;
  }
  return table;
}

std::string emit_plot_data(const RejectionTable& table,
                           const SequentialPlan& plan) {
  std::string out = "method,delta,stage,T_k,freq,mce,alpha_spend\n";
  char buf[512];
  for (const auto& row : table.rows) {
    std::string spend;
    if (row.t_k > 0 && row.t_k <= plan.horizon()) {
      std::snprintf(buf, sizeof(buf), "%.17g", spending_value(plan, row.t_k));
      spend = buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%d,%lld,%.17g,%.17g,%s",
                  method_name(row.method), row.delta, row.stage,
                  static_cast<long long>(row.t_k), row.freq, row.mce,
                  spend.c_str());
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace seqab
