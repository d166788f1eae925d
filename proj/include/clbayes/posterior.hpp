#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "clbayes/adjust.hpp"
#include "clbayes/betabin.hpp"
#include "clbayes/prior.hpp"
#include "clbayes/rng.hpp"

namespace clbayes {

// Log posterior kernel: adjusted composite log-likelihood plus log prior.
std::function<double(const Eigen::VectorXd&)> log_posterior(const MetaDataset& data,
                                                            const Adjustment& adjustment,
                                                            const GaussianPrior& prior);

struct ChainConfig {
  int total = 60000;             // total iterations
  int burn_in = 10000;           // discarded prefix
  int thinning = 10;             // keep every thinning-th state after burn-in
  int adapt_start = 1000;        // iterations before proposal adaptation begins
  int adapt_every = 100;         // proposal refresh cadence afterwards
  double initial_step = 0.1;     // pre-adaptation proposal scale
  double jitter = 1e-8;          // ridge added to the empirical covariance

  void validate(int dim) const;
  int retained() const { return (total - burn_in + thinning - 1) / thinning; }
};

struct PosteriorSample {
  Eigen::MatrixXd draws;           // retained x dim
  double acceptance_rate = 0.0;    // over post-burn-in iterations
  int total_iterations = 0;
  std::vector<std::string> names;  // per-column parameter names
};

// Adaptive random-walk Metropolis: Gaussian proposals whose covariance is
// (2.38^2 / dim) times the running empirical covariance of the chain (plus
// jitter), refreshed every adapt_every iterations once adapt_start
// iterations have passed.  Deterministic given the stream.
PosteriorSample run_chain(const std::function<double(const Eigen::VectorXd&)>& log_target,
                          const Eigen::VectorXd& init, const ChainConfig& config,
                          RandomStream& rng);

// Fraction of retained draws with measure value at or below the reference.
double h_statistic(const PosteriorSample& sample, const EffectMeasure& measure, double reference);

// Calibration statistic g = |2h - 1|.
double g_statistic(double h);

// Central quantile-based interval at credibility level p: empirical
// quantiles of the measure draws at orders (1 - p)/2 and 1 - (1 - p)/2.
std::pair<double, double> qb_interval(const PosteriorSample& sample, const EffectMeasure& measure,
                                      double level);

// Measure evaluated along the chain.
std::vector<double> measure_draws(const PosteriorSample& sample, const EffectMeasure& measure);

}  // namespace clbayes
