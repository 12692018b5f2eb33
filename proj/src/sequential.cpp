#include "seqab/sequential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "seqab/errors.hpp"
#include "seqab/rng.hpp"
#include "seqab/stats.hpp"

namespace seqab {

void SequentialPlan::validate() const {
  if (stage_times.empty())
    throw std::invalid_argument("plan: stage_times must be non-empty");
  std::int64_t prev = 0;
  for (auto t : stage_times) {
    if (t <= prev)
      throw std::invalid_argument("plan: stage_times must be strictly increasing and positive");
    prev = t;
  }
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("plan: alpha must be in (0,1)");
  if (spending == Spending::power && !(theta > 0.0))
    throw std::invalid_argument("plan: theta must be positive");
  if (bootstrap_b < 1)
    throw std::invalid_argument("plan: bootstrap_b must be >= 1");
}

double spending_value(const SequentialPlan& plan, std::int64_t t) {
  plan.validate();
  const auto t_final = plan.horizon();
  if (t <= 0 || t > t_final)
    throw std::invalid_argument("spending_value: t must be in (0, T_K]");
  const double frac = static_cast<double>(t) / static_cast<double>(t_final);
  if (plan.spending == SequentialPlan::Spending::power)
    return plan.alpha * std::pow(frac, plan.theta);
  const double zq = normal_quantile(1.0 - plan.alpha / 2.0);
  return 2.0 - 2.0 * normal_cdf(zq / std::sqrt(frac));
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("psd_sqrt: matrix must be square");
  const double scale = m.norm();
  if ((m - m.transpose()).norm() > 1e-8 * scale + 1e-10)
    throw std::invalid_argument("psd_sqrt: matrix is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double upper_percentile(const std::vector<double>& values, double p) {
  if (values.empty())
    throw std::invalid_argument("upper_percentile: empty input");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("upper_percentile: p must be in (0,1)");
  const auto n = static_cast<std::int64_t>(values.size());
  // 1-based rank of the order statistic; the nudge keeps exact-tie budgets
  // (p*n integral in exact arithmetic) from falling on the wrong side of
  // the floor under binary floating point.
  std::int64_t r =
      n - static_cast<std::int64_t>(std::floor(p * static_cast<double>(n) + 1e-9));
  r = std::clamp<std::int64_t>(r, 1, n);
  std::vector<double> work(values);
  std::nth_element(work.begin(), work.begin() + (r - 1), work.end());
  return work[r - 1];
}

BootstrapState::BootstrapState(int q2, int b, std::uint64_t seed_)
    : sums(Eigen::MatrixXd::Zero(q2, b)), surviving(b), seed(seed_) {
  std::iota(surviving.begin(), surviving.end(), 0);
}

double bootstrap_stage(BootstrapState& bs, const Eigen::MatrixXd& omega_star,
                       const Eigen::VectorXd& sigma_inv_u, std::int64_t t_k,
                       double sigma_hat, double budget) {
  const int q2 = static_cast<int>(bs.sums.rows());
  if (omega_star.rows() != q2 || omega_star.cols() != q2 ||
      sigma_inv_u.size() != q2)
    throw std::invalid_argument("bootstrap_stage: dimension mismatch");
  bs.stage += 1;
  const Eigen::MatrixXd root = psd_sqrt(omega_star);
  const int b_total = bs.b();
  const bool usable = std::isfinite(sigma_hat) && sigma_hat > 0.0;
  const double scale =
      usable ? 1.0 / (std::sqrt(static_cast<double>(t_k)) * sigma_hat) : 0.0;
  std::vector<double> z(b_total, 0.0);
  Eigen::VectorXd e(q2);
  for (int b = 0; b < b_total; ++b) {
    Rng rng(mix_seed({bs.seed, static_cast<std::uint64_t>(b),
                      static_cast<std::uint64_t>(bs.stage)}));
    for (int i = 0; i < q2; ++i) e(i) = rng.normal();
    bs.sums.col(b).noalias() += root * e;
    z[b] = scale * sigma_inv_u.dot(bs.sums.col(b));
  }
  if (!usable || budget <= 0.0 || bs.surviving.empty())
    return std::numeric_limits<double>::infinity();
  std::vector<double> z_surv;
  z_surv.reserve(bs.surviving.size());
  for (int b : bs.surviving) z_surv.push_back(z[b]);
  const double threshold =
      budget >= 1.0 ? -std::numeric_limits<double>::infinity()
                    : upper_percentile(z_surv, budget);
  std::vector<int> kept;
  kept.reserve(bs.surviving.size());
  for (int b : bs.surviving)
    if (z[b] <= threshold) kept.push_back(b);
  bs.surviving = std::move(kept);
  return threshold;
}

std::vector<StageSnapshot> run_sequential_test(
    ObservationSource& source, const SequentialPlan& plan,
    const EstimatorConfig& cfg, const ContrastVector& u,
    bool stop_on_rejection, std::optional<std::int64_t> data_limit) {
  plan.validate();
  cfg.validate();
  const int q = cfg.basis.q();
  if (u.u.size() != 2 * q)
    throw std::invalid_argument("run_sequential_test: contrast size mismatch");

  SuffStats stats(q);
  BootstrapState bs(2 * q, plan.bootstrap_b, plan.seed);
  std::vector<StageSnapshot> snaps;
  std::int64_t t_prev = 0;
  for (int k = 1; k <= plan.stages(); ++k) {
    const std::int64_t t_k = plan.stage_times[static_cast<size_t>(k - 1)];
    if (data_limit && t_k > *data_limit) break;
    std::vector<Observation> batch = source.next_batch(t_prev, t_k);
    if (static_cast<std::int64_t>(batch.size()) != t_k - t_prev)
      throw std::invalid_argument("run_sequential_test: batch size does not match the stage plan");
    update_suff_stats(stats, batch, cfg);

    StageSnapshot snap;
    snap.k = k;
    snap.t_k = t_k;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double sigma_hat = nan;
    try {
      const CoefficientEstimate beta = estimate_beta(stats, cfg);
      snap.ridge_used = beta.ridge_used;
      snap.tau_hat = estimate_tau(beta, u);
      update_omega(stats, batch, beta, cfg);
      source.on_stage_complete(k, beta);
      const VarianceEstimate var = estimate_variance(stats, u, snap.tau_hat, t_k, cfg);
      sigma_hat = std::sqrt(var.sigma2_hat);
      snap.sigma_hat = sigma_hat;
      snap.z_stat = var.z;
    } catch (const NumericalError&) {
      snap.degenerate = true;
      snap.sigma_hat = nan;
      snap.z_stat = nan;
    }

    const double spent =
        static_cast<double>(bs.b() - static_cast<int>(bs.surviving.size())) /
        static_cast<double>(bs.b());
    const double budget =
        snap.degenerate ? -1.0
                        : (spending_value(plan, t_k) - spent) / (1.0 - spent);
    const Eigen::VectorXd w =
        snap.degenerate ? Eigen::VectorXd::Zero(2 * q)
                        : contrast_solve(stats, u, cfg);
    snap.threshold = bootstrap_stage(bs, stats.omega_star, w, t_k, sigma_hat, budget);
    snap.spending_consumed =
        static_cast<double>(bs.b() - static_cast<int>(bs.surviving.size())) /
        static_cast<double>(bs.b());
    snap.rejected = !snap.degenerate && snap.z_stat > snap.threshold;
    snaps.push_back(snap);
    if (snap.rejected && stop_on_rejection) break;
    t_prev = t_k;
  }
  return snaps;
}

std::vector<StageSnapshot> run_sequential_test(
    ObservationSource& source, const SequentialPlan& plan,
    const EstimatorConfig& cfg, const ReferenceDistribution& g,
    bool stop_on_rejection, std::optional<std::int64_t> data_limit) {
  const ContrastVector u = compute_contrast(cfg.basis, g);
  return run_sequential_test(source, plan, cfg, u, stop_on_rejection,
                             data_limit);
}

std::vector<double> classical_wild_bootstrap(
    const std::vector<Observation>& data, const CoefficientEstimate& beta,
    const EstimatorConfig& cfg, const WildBootstrapConfig& wcfg,
    const ContrastVector& u, double sigma_hat, std::int64_t t) {
  if (t < 1 || static_cast<std::int64_t>(data.size()) < t)
    throw std::logic_error("classical_wild_bootstrap: insufficient data");
  if (!(sigma_hat > 0.0))
    throw NumericalError("classical_wild_bootstrap: sigma must be positive");
  const int q = cfg.basis.q();

  // Rebuild the design means and per-observation scores once.
  SuffStats stats(q);
  std::vector<Observation> head(data.begin(), data.begin() + t);
  update_suff_stats(stats, head, cfg);
  std::vector<Eigen::VectorXd> scores;
  scores.reserve(head.size());
  for (const auto& obs : head) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * q);
    const Eigen::VectorXd phi = basis_eval(cfg.basis, obs.s);
    if (obs.a == 0)
      v.head(q) = residual(obs, beta, cfg, 0) * phi;
    else
      v.tail(q) = residual(obs, beta, cfg, 1) * phi;
    scores.push_back(std::move(v));
  }
  const Eigen::VectorXd w = contrast_solve(stats, u, cfg);
  // u^T Sigma^-1 beta_mb with beta_mb = Sigma^-1 mean(zeta v) collapses to
  // w . mean(zeta v), so each replicate is a weighted mean of projected
  // scores.
  std::vector<double> proj(scores.size());
  for (size_t j = 0; j < scores.size(); ++j) proj[j] = w.dot(scores[j]);

  std::vector<double> out(static_cast<size_t>(wcfg.b));
  const double scale = std::sqrt(static_cast<double>(t)) / sigma_hat /
                       static_cast<double>(t);
  for (int b = 0; b < wcfg.b; ++b) {
    Rng rng(mix_seed({wcfg.seed, static_cast<std::uint64_t>(b)}));
    double acc = 0.0;
    for (double pj : proj) {
      const double zeta =
          wcfg.multiplier == WildBootstrapConfig::Multiplier::gaussian
              ? rng.normal()
              : (rng.bernoulli(0.5) ? 1.0 : -1.0);
      acc += zeta * pj;
    }
    out[static_cast<size_t>(b)] = scale * acc;
  }
  return out;
}

}  // namespace seqab
