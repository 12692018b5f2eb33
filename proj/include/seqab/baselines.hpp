#pragma once
// Comparator tests: Welch two-sample t-test, a group-sequential z-test with
// a root-K boundary profile, and a paired-block crossover t-test.

#include <cstdint>
#include <utility>
#include <vector>

namespace seqab {

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  bool reject = false;
};

// Welch (unequal-variance) two-sample t-test on (arm, reward) pairs.
// One-sided tests H1: mean(arm 1) > mean(arm 0). Requires at least two
// observations in each arm. Zero pooled standard error is handled by
// convention: positive difference -> p = 0, negative -> p = 1, zero -> p = 0.5.
TTestResult two_sample_t(const std::vector<std::pair<int, double>>& data,
                         double alpha, bool one_sided = true);

// Boundary constant c for the group-sequential z-test: at stage k of K the
// cumulative z statistic is compared against c * sqrt(K/k), with c chosen
// so the one-sided familywise type-I error under independence is alpha.
// Values for alpha = 0.05, K in {1..10} ship precomputed; other inputs are
// Monte-Carlo calibrated on first use and memoized (deterministic).
double obf_boundary_constant(int k_stages, double alpha);

// Fresh Monte-Carlo calibration of the boundary constant (exposed so tests
// can cross-check the shipped table with an independent seed).
double obf_calibrate(int k_stages, double alpha, int paths,
                     std::uint64_t seed);

struct ObfStage {
  double z = 0.0;
  double boundary = 0.0;
  bool reject = false;
};

// Group-sequential z-test over K equal-size batches of (arm, reward)
// pairs: stage k pools batches 1..k, computes the Welch z statistic, and
// compares it against obf_boundary_constant(K, alpha) * sqrt(K/k).
std::vector<ObfStage> obf_sequential(
    const std::vector<std::vector<std::pair<int, double>>>& batches,
    int k_stages, double alpha);

struct CrossoverEstimate {
  double tau_10 = 0.0;   // effect estimated from control-then-treatment pairs
  double tau_01 = 0.0;   // negated effect from treatment-then-control pairs
  double tau_hat = 0.0;  // (tau_10 - tau_01) / 2
  double sigma2_hat = 0.0;
  double m = 0.0;  // 1/(# pairs ending treated) + 1/(# pairs ending control)
  int n = 0;       // number of block pairs
};

struct CrossoverResult {
  double tau_hat = 0.0;
  double sigma2_hat = 0.0;
  double m = 0.0;
  double t_stat = 0.0;
  int df = 0;  // 2n - 2
  bool reject = false;
};

// Point estimates from 2n (block mean, block treatment) entries in time
// order; pair j is blocks (2j, 2j+1). Requires both orders present.
CrossoverEstimate crossover_estimate(
    const std::vector<std::pair<double, double>>& blocks);

// Full test: reject when tau_hat / sqrt(sigma2_hat * m / 4) exceeds the
// upper-alpha t quantile with 2n-2 degrees of freedom. sigma2_hat == 0
// raises NumericalError.
CrossoverResult crossover_t(const std::vector<std::pair<double, double>>& blocks,
                            double alpha);

}  // namespace seqab
