#include "clbayes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clbayes/errors.hpp"

namespace clbayes {

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidInput("quantile: empty sample");
  if (!(p >= 0.0) || !(p <= 1.0)) throw InvalidInput("quantile: p must lie in [0, 1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = static_cast<double>(n - 1) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo >= n - 1) return sorted[n - 1];
  double w = h - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
}

double ecdf(const std::vector<double>& values, double x) {
  if (values.empty()) throw InvalidInput("ecdf: empty sample");
  std::size_t count = 0;
  for (double v : values) {
    if (v <= x) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf) {
  if (values.empty()) throw InvalidInput("ks_statistic: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double f = cdf(values[i]);
    double upper = (static_cast<double>(i) + 1.0) / n - f;
    double lower = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(upper, lower));
  }
  return d;
}

double ks_asymptotic_pvalue(double statistic, std::size_t n) {
  double lambda = std::sqrt(static_cast<double>(n)) * statistic;
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> values, const std::function<double(double)>& cdf) {
  KsResult r;
  std::size_t n = values.size();
  r.statistic = ks_statistic(std::move(values), cdf);
  r.p_value = ks_asymptotic_pvalue(r.statistic, n);
  return r;
}

KsResult ks_test_uniform(std::vector<double> values) {
  return ks_test(std::move(values), [](double x) { return std::clamp(x, 0.0, 1.0); });
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0) throw InvalidInput("ks_critical_value: n must be positive");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw InvalidInput("ks_critical_value: alpha in (0, 1)");
  // Invert the asymptotic tail: Q(lambda) = alpha with Q dominated by its
  // first term 2 exp(-2 lambda^2); refine by bisection on the full series.
  double lo = 0.2, hi = 4.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    double q = ks_asymptotic_pvalue(mid, 1);  // Q(mid) since sqrt(1) = 1
    if (q > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n));
}

namespace {

// Strict inversions (left > right) counted by merge sort; equal keys merge
// from the left and contribute nothing.
long long count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                           std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  long long count = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      count += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

template <typename Equal>
long long run_pairs(std::size_t n, const Equal& equal) {
  long long total = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && equal(j + 1, i)) ++j;
    long long c = static_cast<long long>(j - i + 1);
    total += c * (c - 1) / 2;
    i = j + 1;
  }
  return total;
}

}  // namespace

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidInput("kendall_tau: size mismatch");
  if (x.size() < 2) throw InvalidInput("kendall_tau: need at least two pairs");
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = y[idx[i]];

  long long tied_x = run_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
  long long tied_xy = run_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]];
  });
  std::vector<double> ys = y;
  std::sort(ys.begin(), ys.end());
  long long tied_y = run_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  // Ties in x alone sort with ascending y, so the inversion count is exactly
  // the number of discordant pairs; pairs tied in either coordinate are
  // neither concordant nor discordant.
  std::vector<double> buf(n);
  long long discordant = count_inversions(v, buf, 0, n);
  long long total = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  long long concordant = total - discordant - tied_x - tied_y + tied_xy;
  return static_cast<double>(concordant - discordant) / static_cast<double>(total);
}

namespace {

std::vector<double> mid_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double pearson_corr(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidInput("pearson_corr: size mismatch");
  if (x.size() < 2) throw InvalidInput("pearson_corr: need at least two pairs");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw NumericalError("pearson_corr: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_corr(mid_ranks(x), mid_ranks(y));
}

}  // namespace clbayes
