#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "seqab/basis.hpp"

namespace seqab {

// One time step of the trajectory: state, binary action, reward, next state.
struct Observation {
  std::int64_t t = 0;
  Eigen::VectorXd s;
  int a = 0;  // 0 or 1
  double y = 0.0;
  Eigen::VectorXd s_next;
};

struct EstimatorConfig {
  double gamma = 0.6;  // discount factor, must be in (0,1)
  BasisSpec basis;
  double ridge_epsilon = 1e-8;  // fallback regularization scale

  void validate() const;
};

// Online sufficient statistics. sigma0/sigma1 and eta0/eta1 are running
// means over all t observations (non-matching actions contribute zero
// terms, so the divisor is the total count). omega is the running mean of
// the score outer products, refreshed once per stage from omega_star, the
// unnormalized sum over the newest batch evaluated at the current
// coefficients. omega_t tracks how many observations omega covers; under
// the normal stage protocol it always equals the previous stage time.
struct SuffStats {
  std::int64_t t = 0;
  Eigen::MatrixXd sigma0, sigma1;  // q x q
  Eigen::VectorXd eta0, eta1;      // q
  Eigen::MatrixXd omega;           // 2q x 2q, running mean
  Eigen::MatrixXd omega_star;      // 2q x 2q, last batch, unnormalized
  std::int64_t omega_t = 0;

  explicit SuffStats(int q = 1)
      : sigma0(Eigen::MatrixXd::Zero(q, q)),
        sigma1(Eigen::MatrixXd::Zero(q, q)),
        eta0(Eigen::VectorXd::Zero(q)),
        eta1(Eigen::VectorXd::Zero(q)),
        omega(Eigen::MatrixXd::Zero(2 * q, 2 * q)),
        omega_star(Eigen::MatrixXd::Zero(2 * q, 2 * q)) {}

  int q() const { return static_cast<int>(eta0.size()); }
};

struct CoefficientEstimate {
  Eigen::VectorXd beta0, beta1;  // q each
  bool ridge_used = false;
};

struct VarianceEstimate {
  double tau_hat = 0.0;
  double sigma2_hat = 0.0;
  double z = 0.0;  // sqrt(t) * tau_hat / sigma_hat
};

struct CovarianceEstimate {
  Eigen::MatrixXd xi;  // K x K, unit diagonal
};

// Per-stage inputs for the cross-stage covariance estimator.
struct StageStats {
  Eigen::MatrixXd sigma0, sigma1;  // q x q blocks at this stage
  Eigen::MatrixXd omega;           // 2q x 2q at this stage
  double sigma_hat = 0.0;
  std::int64_t t = 0;
};

// Fold a batch of observations into the running means (sigma/eta and the
// count only; omega needs coefficients and is updated by update_omega).
// Throws std::invalid_argument on dimension mismatches.
void update_suff_stats(SuffStats& stats, const std::vector<Observation>& batch,
                       const EstimatorConfig& cfg);

// Solve sigma_a beta_a = eta_a per action block. Numerically singular
// blocks (reciprocal condition < 1e-12, nonfinite solution, or residual
// above 1e-8 * |eta_a|) fall back to a ridge solve with
// lambda = ridge_epsilon * |sigma_a|_F / q, surfaced via ridge_used.
// Throws std::logic_error when t = 0 and NumericalError when even the
// ridge solve fails.
CoefficientEstimate estimate_beta(const SuffStats& stats,
                                  const EstimatorConfig& cfg);

// tau = u . (beta0, beta1).
double estimate_tau(const CoefficientEstimate& beta, const ContrastVector& u);

// One-step temporal-difference residual for action a's coefficients.
double residual(const Observation& obs, const CoefficientEstimate& beta,
                const EstimatorConfig& cfg, int a);

// Recompute scores over the newest batch at the current coefficients:
// omega_star = unnormalized sum of v v^T, then fold into the running
// omega. Must be called after update_suff_stats/estimate_beta for the same
// batch (std::logic_error otherwise).
void update_omega(SuffStats& stats, const std::vector<Observation>& batch,
                  const CoefficientEstimate& beta, const EstimatorConfig& cfg);

// Solve the transposed block system sigma^T w = u (same ridge policy as
// estimate_beta); w is the weight vector the sandwich variance and the
// bootstrap share. ridge_used, when non-null, reports fallback use.
Eigen::VectorXd contrast_solve(const SuffStats& stats, const ContrastVector& u,
                               const EstimatorConfig& cfg,
                               bool* ridge_used = nullptr);

// Sandwich variance sigma2 = w^T omega w with w = contrast_solve(...), and
// the standardized statistic z = sqrt(t) tau / sigma. Throws NumericalError
// when sigma2 is nonpositive or nonfinite (degenerate design).
VarianceEstimate estimate_variance(const SuffStats& stats,
                                   const ContrastVector& u, double tau,
                                   std::int64_t t, const EstimatorConfig& cfg);

// Cross-stage correlation matrix of the standardized statistics:
// xi[k1][k2] = sqrt(T_k1/T_k2) w_k1^T omega_k1 w_k2 / (sigma_k1 sigma_k2)
// for k1 <= k2, completed symmetrically; unit diagonal by construction.
CovarianceEstimate estimate_xi(const std::vector<StageStats>& stages,
                               const ContrastVector& u,
                               const EstimatorConfig& cfg);

// Policy as a treatment probability function of the state.
using PolicyFn = std::function<double(const Eigen::VectorXd&)>;

// Coefficients of the Q-functions under a state-dependent target policy pi:
// jointly solves the 2q x 2q system whose row blocks are the Bellman
// equations for a = 0 and a = 1 with continuation value mixed by pi.
CoefficientEstimate estimate_q_dynamic(const std::vector<Observation>& data,
                                       const PolicyFn& pi,
                                       const EstimatorConfig& cfg);

// Reference-measure average of the value difference between policies pi1
// and pi2 evaluated from their Q-coefficients.
double estimate_tau_dynamic(const CoefficientEstimate& q1,
                            const CoefficientEstimate& q2, const PolicyFn& pi1,
                            const PolicyFn& pi2, const ReferenceDistribution& g,
                            const BasisSpec& basis);

}  // namespace seqab
