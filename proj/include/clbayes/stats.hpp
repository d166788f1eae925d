#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace clbayes {

// Empirical quantile with linear interpolation between order statistics
// (the common "type 7" rule: h = (n - 1) p).  The input must be sorted
// ascending and non-empty; p must lie in [0, 1].
double quantile(const std::vector<double>& sorted, double p);

// Fraction of values <= x.
double ecdf(const std::vector<double>& values, double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF, and the
// asymptotic p-value Q(sqrt(n) * D).
double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf);
double ks_asymptotic_pvalue(double statistic, std::size_t n);
KsResult ks_test(std::vector<double> values, const std::function<double(double)>& cdf);

// Same test against the uniform distribution on (0, 1).
KsResult ks_test_uniform(std::vector<double> values);

// Approximate critical value of the KS statistic: c(alpha) / sqrt(n) from
// the asymptotic distribution.
double ks_critical_value(std::size_t n, double alpha);

// Kendall tau-a of the paired sample (concordant minus discordant pairs over
// all pairs).  Sizes must match and be at least 2.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation (Pearson correlation of mid-ranks).
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation.
double pearson_corr(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace clbayes
