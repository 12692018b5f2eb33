#include "seqab/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "seqab/errors.hpp"

namespace seqab {

void EstimatorConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("estimator: gamma must be in (0,1)");
  if (ridge_epsilon < 0.0)
    throw std::invalid_argument("estimator: ridge_epsilon must be >= 0");
  basis.validate();
}

void update_suff_stats(SuffStats& stats, const std::vector<Observation>& batch,
                       const EstimatorConfig& cfg) {
  const int q = cfg.basis.q();
  if (stats.q() != q)
    throw std::invalid_argument("update_suff_stats: stats/basis size mismatch");
  for (const auto& obs : batch) {
    if (obs.a != 0 && obs.a != 1)
      throw std::invalid_argument("update_suff_stats: action must be 0 or 1");
    const Eigen::VectorXd phi = basis_eval(cfg.basis, obs.s);
    const Eigen::VectorXd phi_next = basis_eval(cfg.basis, obs.s_next);
    const double n = static_cast<double>(++stats.t);
    const double w = 1.0 / n;
    const double keep = 1.0 - w;
    // Running mean over the total count; the non-matching action block
    // receives a zero contribution but still shrinks by (n-1)/n.
    stats.sigma0 *= keep;
    stats.sigma1 *= keep;
    stats.eta0 *= keep;
    stats.eta1 *= keep;
    const Eigen::MatrixXd term =
        phi * (phi - cfg.gamma * phi_next).transpose();
    if (obs.a == 0) {
      stats.sigma0.noalias() += w * term;
      stats.eta0.noalias() += (w * obs.y) * phi;
    } else {
      stats.sigma1.noalias() += w * term;
      stats.eta1.noalias() += (w * obs.y) * phi;
    }
  }
}

namespace {

// Shared block solver: plain LU when the block is well conditioned and the
// residual passes, otherwise a ridge-regularized solve.
Eigen::VectorXd solve_block(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                            double ridge_epsilon, bool* used_ridge) {
  const int q = static_cast<int>(rhs.size());
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const double rcond = lu.rcond();
  if (std::isfinite(rcond) && rcond >= 1e-12) {
    Eigen::VectorXd x = lu.solve(rhs);
    const double resid = (m * x - rhs).norm();
    if (x.allFinite() && resid <= 1e-8 * std::max(rhs.norm(), 1e-300))
      return x;
  }
  double lambda = ridge_epsilon * m.norm() / q;  // Frobenius-norm scale
  if (lambda <= 0.0) lambda = ridge_epsilon;     // zero block: pure ridge
  if (lambda <= 0.0)
    throw NumericalError("block solve: singular system and no ridge available");
  Eigen::MatrixXd mr = m;
  mr.diagonal().array() += lambda;
  Eigen::VectorXd x = mr.partialPivLu().solve(rhs);
  if (!x.allFinite()) throw NumericalError("block solve: ridge solve failed");
  if (used_ridge) *used_ridge = true;
  return x;
}

}  // namespace

CoefficientEstimate estimate_beta(const SuffStats& stats,
                                  const EstimatorConfig& cfg) {
  if (stats.t == 0) throw std::logic_error("estimate_beta: no data");
  CoefficientEstimate out;
  bool ridge = false;
  out.beta0 = solve_block(stats.sigma0, stats.eta0, cfg.ridge_epsilon, &ridge);
  out.beta1 = solve_block(stats.sigma1, stats.eta1, cfg.ridge_epsilon, &ridge);
  out.ridge_used = ridge;
  return out;
}

double estimate_tau(const CoefficientEstimate& beta, const ContrastVector& u) {
  const int q = static_cast<int>(beta.beta0.size());
  if (u.u.size() != 2 * q)
    throw std::invalid_argument("estimate_tau: contrast size mismatch");
  return u.u.head(q).dot(beta.beta0) + u.u.tail(q).dot(beta.beta1);
}

double residual(const Observation& obs, const CoefficientEstimate& beta,
                const EstimatorConfig& cfg, int a) {
  if (a != 0 && a != 1)
    throw std::invalid_argument("residual: action must be 0 or 1");
  const Eigen::VectorXd& b = (a == 0) ? beta.beta0 : beta.beta1;
  const Eigen::VectorXd phi = basis_eval(cfg.basis, obs.s);
  const Eigen::VectorXd phi_next = basis_eval(cfg.basis, obs.s_next);
  return obs.y + cfg.gamma * phi_next.dot(b) - phi.dot(b);
}

void update_omega(SuffStats& stats, const std::vector<Observation>& batch,
                  const CoefficientEstimate& beta, const EstimatorConfig& cfg) {
  const int q = stats.q();
  const auto batch_n = static_cast<std::int64_t>(batch.size());
  if (stats.t < stats.omega_t + batch_n)
    throw std::logic_error(
        "update_omega: batch not yet folded into the sufficient statistics");
  stats.omega_star.setZero();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * q);
  for (const auto& obs : batch) {
    const Eigen::VectorXd phi = basis_eval(cfg.basis, obs.s);
    v.setZero();
    if (obs.a == 0)
      v.head(q) = residual(obs, beta, cfg, 0) * phi;
    else
      v.tail(q) = residual(obs, beta, cfg, 1) * phi;
    stats.omega_star.noalias() += v * v.transpose();
  }
  const double t_new = static_cast<double>(stats.omega_t + batch_n);
  if (t_new > 0.0)
    stats.omega = (static_cast<double>(stats.omega_t) * stats.omega +
                   stats.omega_star) /
                  t_new;
  stats.omega_t += batch_n;
}

Eigen::VectorXd contrast_solve(const SuffStats& stats, const ContrastVector& u,
                               const EstimatorConfig& cfg, bool* ridge_used) {
  const int q = stats.q();
  if (u.u.size() != 2 * q)
    throw std::invalid_argument("contrast_solve: contrast size mismatch");
  bool ridge = false;
  Eigen::VectorXd w(2 * q);
  w.head(q) = solve_block(stats.sigma0.transpose(), u.u.head(q),
                          cfg.ridge_epsilon, &ridge);
  w.tail(q) = solve_block(stats.sigma1.transpose(), u.u.tail(q),
                          cfg.ridge_epsilon, &ridge);
  if (ridge_used) *ridge_used = ridge;
  return w;
}

VarianceEstimate estimate_variance(const SuffStats& stats,
                                   const ContrastVector& u, double tau,
                                   std::int64_t t, const EstimatorConfig& cfg) {
  const Eigen::VectorXd w = contrast_solve(stats, u, cfg);
  const double sigma2 = w.dot(stats.omega * w);
  if (!std::isfinite(sigma2) || sigma2 <= 0.0)
    throw NumericalError("estimate_variance: nonpositive variance (degenerate design)");
  VarianceEstimate out;
  out.tau_hat = tau;
  out.sigma2_hat = sigma2;
  out.z = std::sqrt(static_cast<double>(t)) * tau / std::sqrt(sigma2);
  return out;
}

CovarianceEstimate estimate_xi(const std::vector<StageStats>& stages,
                               const ContrastVector& u,
                               const EstimatorConfig& cfg) {
  const int K = static_cast<int>(stages.size());
  if (K == 0) throw std::invalid_argument("estimate_xi: no stages");
  for (int k = 1; k < K; ++k)
    if (stages[k].t <= stages[k - 1].t)
      throw std::invalid_argument("estimate_xi: stage times must increase");
  std::vector<Eigen::VectorXd> w(K);
  for (int k = 0; k < K; ++k) {
    if (!(stages[k].sigma_hat > 0.0))
      throw NumericalError("estimate_xi: zero sigma at a stage");
    SuffStats tmp(static_cast<int>(stages[k].sigma0.rows()));
    tmp.sigma0 = stages[k].sigma0;
    tmp.sigma1 = stages[k].sigma1;
    w[k] = contrast_solve(tmp, u, cfg);
  }
  CovarianceEstimate out;
  out.xi = Eigen::MatrixXd::Identity(K, K);
  for (int k1 = 0; k1 < K; ++k1) {
    for (int k2 = k1; k2 < K; ++k2) {
      const double num = w[k1].dot(stages[k1].omega * w[k2]);
      const double val = std::sqrt(static_cast<double>(stages[k1].t) /
                                   static_cast<double>(stages[k2].t)) *
                         num / (stages[k1].sigma_hat * stages[k2].sigma_hat);
      out.xi(k1, k2) = val;
      out.xi(k2, k1) = val;
    }
  }
  return out;
}

CoefficientEstimate estimate_q_dynamic(const std::vector<Observation>& data,
                                       const PolicyFn& pi,
                                       const EstimatorConfig& cfg) {
  if (data.empty()) throw std::logic_error("estimate_q_dynamic: no data");
  const int q = cfg.basis.q();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * q, 2 * q);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(2 * q);
  for (const auto& obs : data) {
    const double p = pi(obs.s_next);
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("estimate_q_dynamic: policy outside [0,1]");
    const Eigen::VectorXd phi = basis_eval(cfg.basis, obs.s);
    const Eigen::VectorXd phi_next = basis_eval(cfg.basis, obs.s_next);
    // Row block for the observed action a: the Bellman equation
    // phi^T beta_a - gamma (1-p) phi'^T beta_0 - gamma p phi'^T beta_1 = y,
    // tested against phi.
    const int r0 = obs.a * q;  // row offset for the matching block
    m.block(r0, 0, q, q).noalias() -=
        (cfg.gamma * (1.0 - p)) * (phi * phi_next.transpose());
    m.block(r0, q, q, q).noalias() -=
        (cfg.gamma * p) * (phi * phi_next.transpose());
    m.block(r0, obs.a * q, q, q).noalias() += phi * phi.transpose();
    h.segment(r0, q).noalias() += obs.y * phi;
  }
  const double n = static_cast<double>(data.size());
  m /= n;
  h /= n;
  bool ridge = false;
  const Eigen::VectorXd x = solve_block(m, h, cfg.ridge_epsilon, &ridge);
  CoefficientEstimate out;
  out.beta0 = x.head(q);
  out.beta1 = x.tail(q);
  out.ridge_used = ridge;
  return out;
}

double estimate_tau_dynamic(const CoefficientEstimate& q1,
                            const CoefficientEstimate& q2, const PolicyFn& pi1,
                            const PolicyFn& pi2, const ReferenceDistribution& g,
                            const BasisSpec& basis) {
  auto integrand = [&](const Eigen::VectorXd& s) {
    const Eigen::VectorXd phi = basis_eval(basis, s);
    const double v1_0 = phi.dot(q1.beta0), v1_1 = phi.dot(q1.beta1);
    const double v2_0 = phi.dot(q2.beta0), v2_1 = phi.dot(q2.beta1);
    const double p1 = pi1(s), p2 = pi2(s);
    return (v1_1 - v1_0) * p1 - (v2_1 - v2_0) * p2 + v1_0 - v2_0;
  };
  if (g.kind == ReferenceDistribution::Kind::point_mass)
    return integrand(g.point);
  if (g.samples.empty())
    throw std::invalid_argument("estimate_tau_dynamic: empty sample set");
  double acc = 0.0;
  for (const auto& s : g.samples) acc += integrand(s);
  return acc / static_cast<double>(g.samples.size());
}

}  // namespace seqab
