#pragma once

// Thin wrappers around the special functions the model needs, so the rest of
// the library has a single point of contact with the underlying
// implementation.

namespace clbayes::sf {

// d/dx log Gamma(x), x > 0.
double digamma(double x);

// d^2/dx^2 log Gamma(x), x > 0.
double trigamma(double x);

// log Beta(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b).
double log_beta(double a, double b);

// Regularised incomplete beta I_x(a, b) and its inverse in x.
double reg_inc_beta(double a, double b, double x);
double reg_inc_beta_inv(double a, double b, double p);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace clbayes::sf
