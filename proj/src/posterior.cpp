#include "clbayes/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clbayes/errors.hpp"
#include "clbayes/stats.hpp"

namespace clbayes {

std::function<double(const Eigen::VectorXd&)> log_posterior(const MetaDataset& data,
                                                            const Adjustment& adjustment,
                                                            const GaussianPrior& prior) {
  if (prior.dim() != 2 * data.group_count()) {
    throw InvalidInput("log_posterior: prior dimension does not match the dataset");
  }
  return [&data, adjustment, prior](const Eigen::VectorXd& x) {
    return adjustment.loglik(data, ThetaLog(x)) + prior.log_density(x);
  };
}

void ChainConfig::validate(int dim) const {
  if (dim < 1) throw InvalidInput("ChainConfig: dimension must be positive");
  if (burn_in < 0 || total <= burn_in) throw InvalidInput("ChainConfig: total must exceed burn_in");
  if (thinning < 1) throw InvalidInput("ChainConfig: thinning must be at least 1");
  if (adapt_start < 1 || adapt_every < 1) {
    throw InvalidInput("ChainConfig: adaptation cadence must be positive");
  }
  if (!(initial_step > 0.0) || !(jitter >= 0.0)) {
    throw InvalidInput("ChainConfig: initial_step must be positive and jitter non-negative");
  }
}

namespace {

// Running mean and scatter for the proposal covariance (Welford).
class RunningMoments {
 public:
  explicit RunningMoments(int dim)
      : count_(0), mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const Eigen::VectorXd& x) {
    ++count_;
    Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_).transpose();
  }

  long count() const { return count_; }

  Eigen::MatrixXd covariance() const {
    if (count_ < 2) throw NumericalError("RunningMoments: need two observations");
    Eigen::MatrixXd c = m2_ / static_cast<double>(count_ - 1);
    return 0.5 * (c + c.transpose());
  }

 private:
  long count_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

}  // namespace

PosteriorSample run_chain(const std::function<double(const Eigen::VectorXd&)>& log_target,
                          const Eigen::VectorXd& init, const ChainConfig& config,
                          RandomStream& rng) {
  const int dim = static_cast<int>(init.size());
  config.validate(dim);
  if (!init.allFinite()) throw InvalidInput("run_chain: initial point must be finite");

  Eigen::VectorXd x = init;
  double lp = log_target(x);
  if (!std::isfinite(lp)) {
    throw NonFiniteTarget("run_chain: log target is not finite at the initial point");
  }

  const double scale = 2.38 * 2.38 / static_cast<double>(dim);
  Eigen::MatrixXd proposal_chol = std::sqrt(scale) * config.initial_step *
                                  Eigen::MatrixXd::Identity(dim, dim);

  RunningMoments moments(dim);
  moments.add(x);

  PosteriorSample out;
  out.draws.resize(config.retained(), dim);
  if (dim % 2 == 0) {
    out.names = parameter_names(dim / 2);
  } else {
    for (int j = 0; j < dim; ++j) out.names.push_back("x" + std::to_string(j + 1));
  }
  long accepted = 0;
  long post_burn = 0;
  int kept = 0;

  for (int iter = 0; iter < config.total; ++iter) {
    Eigen::VectorXd z(dim);
    for (int j = 0; j < dim; ++j) z[j] = rng.normal();
    Eigen::VectorXd candidate = x + proposal_chol * z;
    double lp_candidate = candidate.allFinite() ? log_target(candidate)
                                                : -std::numeric_limits<double>::infinity();
    double log_u = std::log(rng.uniform());
    if (std::isfinite(lp_candidate) && log_u < lp_candidate - lp) {
      x = candidate;
      lp = lp_candidate;
      if (iter >= config.burn_in) ++accepted;
    }
    if (iter >= config.burn_in) {
      ++post_burn;
      if ((iter - config.burn_in) % config.thinning == 0) {
        out.draws.row(kept++) = x.transpose();
      }
    }

    moments.add(x);
    if (iter + 1 >= config.adapt_start && (iter + 1) % config.adapt_every == 0) {
      Eigen::MatrixXd cov = scale * (moments.covariance() +
                                     config.jitter * Eigen::MatrixXd::Identity(dim, dim));
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() == Eigen::Success) proposal_chol = llt.matrixL();
    }
  }

  out.draws.conservativeResize(kept, dim);
  out.acceptance_rate = post_burn > 0 ? static_cast<double>(accepted) / static_cast<double>(post_burn) : 0.0;
  out.total_iterations = config.total;
  return out;
}

std::vector<double> measure_draws(const PosteriorSample& sample, const EffectMeasure& measure) {
  if (sample.draws.rows() == 0) throw InvalidInput("measure_draws: empty sample");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(sample.draws.rows()));
  for (Eigen::Index i = 0; i < sample.draws.rows(); ++i) {
    values.push_back(measure.value(ThetaLog(sample.draws.row(i).transpose())));
  }
  return values;
}

double h_statistic(const PosteriorSample& sample, const EffectMeasure& measure, double reference) {
  if (!std::isfinite(reference)) throw InvalidInput("h_statistic: reference must be finite");
  std::vector<double> values = measure_draws(sample, measure);
  std::size_t count = 0;
  for (double v : values) {
    if (v <= reference) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

double g_statistic(double h) {
  if (!(h >= 0.0) || !(h <= 1.0)) throw InvalidInput("g_statistic: h must lie in [0, 1]");
  return std::abs(2.0 * h - 1.0);
}

std::pair<double, double> qb_interval(const PosteriorSample& sample, const EffectMeasure& measure,
                                      double level) {
  if (!(level >= 0.0) || !(level < 1.0)) {
    throw InvalidInput("qb_interval: level must lie in [0, 1)");
  }
  std::vector<double> values = measure_draws(sample, measure);
  std::sort(values.begin(), values.end());
  double lo = (1.0 - level) / 2.0;
  return {quantile(values, lo), quantile(values, 1.0 - lo)};
}

}  // namespace clbayes
