#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "seqab/basis.hpp"
#include "seqab/estimator.hpp"

namespace seqab {

// Interim-analysis schedule plus error-spending configuration.
struct SequentialPlan {
  enum class Spending {
    obrien_fleming,  // 2 - 2 Phi(Phi^-1(1 - alpha/2) sqrt(T/t)): early-stingy
    power,           // alpha (t/T)^theta
  };
  std::vector<std::int64_t> stage_times;  // strictly increasing T_1 < ... < T_K
  double alpha = 0.05;
  Spending spending = Spending::power;
  double theta = 3.0;  // power-family exponent
  int bootstrap_b = 1000;
  std::uint64_t seed = 0;

  int stages() const { return static_cast<int>(stage_times.size()); }
  std::int64_t horizon() const { return stage_times.back(); }
  void validate() const;
};

// Cumulative type-I error allocated by time t; alpha(T_K) = alpha.
// Throws std::invalid_argument unless 0 < t <= T_K.
double spending_value(const SequentialPlan& plan, std::int64_t t);

// Symmetric PSD square root: R with R R^T = m after clamping negative
// eigenvalues to zero. Throws std::invalid_argument if m is asymmetric
// beyond tolerance.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

// Smallest element v with #{x > v}/n <= p: the ceil((1-p) n)-th ascending
// order statistic. Throws std::invalid_argument on empty input or p
// outside (0,1).
double upper_percentile(const std::vector<double>& values, double p);

// Per-replicate bootstrap accumulators. sums column b carries replicate
// b's running Gaussian sum; surviving is the index set of replicates whose
// paths have stayed below every earlier threshold. Draws for replicate b
// at stage k come from the substream seeded by (seed, b, k), so results
// are a pure function of (seed, plan, data) at any parallelism degree.
struct BootstrapState {
  Eigen::MatrixXd sums;        // 2q x B
  std::vector<int> surviving;  // sorted replicate indices, 0-based
  std::uint64_t seed = 0;
  int stage = 0;  // stages consumed so far

  BootstrapState() = default;
  BootstrapState(int q2, int b, std::uint64_t seed_);
  int b() const { return static_cast<int>(sums.cols()); }
};

// One bootstrap stage: advance every replicate's Gaussian sum by
// psd_sqrt(omega_star) e, standardize, take the upper-budget percentile
// over surviving replicates as the stage threshold, and prune survivors.
// budget <= 0, an empty surviving set, or a nonfinite/nonpositive
// sigma_hat yields +inf and leaves the surviving set unchanged (sums still
// advance so later stages stay aligned).
double bootstrap_stage(BootstrapState& bs, const Eigen::MatrixXd& omega_star,
                       const Eigen::VectorXd& sigma_inv_u, std::int64_t t_k,
                       double sigma_hat, double budget);

// Stage outputs of the decision engine.
struct StageSnapshot {
  int k = 0;  // 1-based stage index
  std::int64_t t_k = 0;
  double tau_hat = 0.0;
  double sigma_hat = 0.0;  // NaN when the stage was degenerate
  double z_stat = 0.0;     // NaN when the stage was degenerate
  double threshold = std::numeric_limits<double>::infinity();
  bool rejected = false;
  double spending_consumed = 0.0;  // pruned fraction |I^c| / B after the stage
  bool degenerate = false;         // sigma undefined: no decision this stage
  bool ridge_used = false;
};

// Streaming data source consumed stage by stage. next_batch must return
// exactly the observations with time indices [t_begin, t_end).
// on_stage_complete lets adaptive designs receive the interim coefficient
// estimates.
class ObservationSource {
 public:
  virtual ~ObservationSource() = default;
  virtual std::vector<Observation> next_batch(std::int64_t t_begin,
                                              std::int64_t t_end) = 0;
  virtual void on_stage_complete(int /*k*/, const CoefficientEstimate&) {}
};

// Full decision engine: per stage, fold the batch, estimate, refresh the
// score covariance, advance the bootstrap, compare z against the
// threshold. Stops at the first rejection when stop_on_rejection is set
// (the default); with it cleared the engine runs all K stages, which
// leaves the recorded decisions unchanged (data before stage k never
// depends on later stages). When data_limit is set, planned stages beyond
// it are skipped (partial run over a finite dataset); the spending
// schedule still follows the full plan.
std::vector<StageSnapshot> run_sequential_test(
    ObservationSource& source, const SequentialPlan& plan,
    const EstimatorConfig& cfg, const ContrastVector& u,
    bool stop_on_rejection = true,
    std::optional<std::int64_t> data_limit = std::nullopt);

// Convenience overload: derives the contrast from a reference distribution.
std::vector<StageSnapshot> run_sequential_test(
    ObservationSource& source, const SequentialPlan& plan,
    const EstimatorConfig& cfg, const ReferenceDistribution& g,
    bool stop_on_rejection = true,
    std::optional<std::int64_t> data_limit = std::nullopt);

// In-memory source over a fixed dataset; batches are positional slices.
class VectorObservationSource : public ObservationSource {
 public:
  explicit VectorObservationSource(std::vector<Observation> data)
      : data_(std::move(data)) {}
  std::vector<Observation> next_batch(std::int64_t t_begin,
                                      std::int64_t t_end) override {
    if (t_begin < 0 || t_end < t_begin ||
        t_end > static_cast<std::int64_t>(data_.size()))
      throw std::logic_error("VectorObservationSource: batch out of range");
    return {data_.begin() + t_begin, data_.begin() + t_end};
  }

 private:
  std::vector<Observation> data_;
};

struct WildBootstrapConfig {
  enum class Multiplier { rademacher, gaussian };
  Multiplier multiplier = Multiplier::gaussian;
  int b = 1000;
  std::uint64_t seed = 0;
};

// Reference single-stage wild bootstrap that keeps the full history: one
// multiplier per observation per replicate. Oracle for validating the
// scalable per-stage scheme. Throws std::logic_error when fewer than t
// observations are supplied.
std::vector<double> classical_wild_bootstrap(
    const std::vector<Observation>& data, const CoefficientEstimate& beta,
    const EstimatorConfig& cfg, const WildBootstrapConfig& wcfg,
    const ContrastVector& u, double sigma_hat, std::int64_t t);

}  // namespace seqab
