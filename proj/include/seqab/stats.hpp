#pragma once

namespace seqab {

// Standard normal CDF, accurate in both tails (erfc-based).
double normal_cdf(double x);

// Inverse standard normal CDF (Wichura-style rational approximation,
// ~1e-15 relative accuracy). p must lie in (0, 1).
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double incomplete_beta(double a, double b, double x);

// Student t CDF / inverse CDF with df > 0 degrees of freedom.
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);

}  // namespace seqab
