#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "clbayes/adjust.hpp"
#include "clbayes/copula.hpp"
#include "clbayes/errors.hpp"
#include "clbayes/freq.hpp"
#include "clbayes/posterior.hpp"
#include "clbayes/rng.hpp"
#include "doctest.h"

using namespace clbayes;

namespace {

MetaDataset small_dataset(std::uint64_t seed) {
  SimSetting s;
  s.id = "post";
  s.family = CopulaKind::Frank;
  s.rank_target = 0.5;
  s.phase = Phase::FixedTruth;
  s.truth = theta_prime();
  s.group_sizes = log_uniform_sizes(10, seed);
  GaussianPrior prior = GaussianPrior::standard(4);
  RandomStream rng(seed);
  return simulate_dataset(s, prior, rng).data;
}

PosteriorSample sample_from_columns(const std::vector<std::vector<double>>& columns) {
  PosteriorSample s;
  const int rows = static_cast<int>(columns.front().size());
  s.draws.resize(rows, static_cast<int>(columns.size()));
  for (int j = 0; j < static_cast<int>(columns.size()); ++j) {
    for (int i = 0; i < rows; ++i) s.draws(i, j) = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  }
  s.names = parameter_names(static_cast<int>(columns.size()) / 2);
  s.acceptance_rate = 0.3;
  s.total_iterations = rows;
  return s;
}

}  // namespace

TEST_CASE("gaussian prior density matches the hand formula") {
  Eigen::VectorXd mean(2), sd(2);
  mean << 0.5, -1.0;
  sd << 2.0, 0.5;
  GaussianPrior prior(mean, sd);
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  double expected = 0.0;
  for (int j = 0; j < 2; ++j) {
    double z = (x[j] - mean[j]) / sd[j];
    expected += -0.5 * z * z - std::log(sd[j]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  CHECK(prior.log_density(x) == doctest::Approx(expected).epsilon(1e-15));

  GaussianPrior std4 = GaussianPrior::standard(4);
  CHECK(std4.dim() == 4);
  CHECK(std4.mean().norm() == 0.0);
  CHECK((std4.sd() - Eigen::VectorXd::Ones(4)).norm() == 0.0);
  GaussianPrior wide = GaussianPrior::diffuse(4, 1e4);
  CHECK(wide.sd()[0] == doctest::Approx(100.0).epsilon(1e-14));

  Eigen::VectorXd bad_sd(2);
  bad_sd << 1.0, 0.0;
  CHECK_THROWS_AS(GaussianPrior(mean, bad_sd), InvalidInput);
  Eigen::VectorXd short_mean(1);
  short_mean << 0.0;
  CHECK_THROWS_AS(GaussianPrior(short_mean, sd), InvalidInput);
  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(prior.log_density(wrong), InvalidInput);
}

TEST_CASE("prior samples have the requested moments and are reproducible") {
  Eigen::VectorXd mean(3), sd(3);
  mean << -1.0, 0.0, 2.0;
  sd << 0.5, 1.0, 3.0;
  GaussianPrior prior(mean, sd);
  RandomStream rng(4001);
  const int n = 20000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), sumsq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = prior.sample(rng);
    sum += x;
    sumsq += x.cwiseProduct(x);
  }
  for (int j = 0; j < 3; ++j) {
    double m = sum[j] / n;
    double v = sumsq[j] / n - m * m;
    CHECK(std::abs(m - mean[j]) < 4.0 * sd[j] / std::sqrt(static_cast<double>(n)));
    CHECK(v == doctest::Approx(sd[j] * sd[j]).epsilon(0.05));
  }
  RandomStream r1(4002), r2(4002);
  CHECK((prior.sample(r1) - prior.sample(r2)).norm() == 0.0);
}

TEST_CASE("chain configuration validates and counts retained draws") {
  ChainConfig config;
  CHECK_NOTHROW(config.validate(4));
  CHECK(config.retained() == 5000);

  ChainConfig tight;
  tight.total = 100;
  tight.burn_in = 40;
  tight.thinning = 7;
  CHECK(tight.retained() == 9);  // ceil(60 / 7)

  ChainConfig bad = config;
  bad.burn_in = bad.total;
  CHECK_THROWS_AS(bad.validate(4), InvalidInput);
  bad = config;
  bad.thinning = 0;
  CHECK_THROWS_AS(bad.validate(4), InvalidInput);
  bad = config;
  bad.adapt_every = 0;
  CHECK_THROWS_AS(bad.validate(4), InvalidInput);
  bad = config;
  bad.initial_step = 0.0;
  CHECK_THROWS_AS(bad.validate(4), InvalidInput);
  CHECK_THROWS_AS(config.validate(0), InvalidInput);
}

TEST_CASE("the sampler reproduces a standard gaussian target") {
  auto log_target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  ChainConfig config;
  config.total = 100000;
  config.burn_in = 20000;
  config.thinning = 16;
  RandomStream rng(4100);
  PosteriorSample sample = run_chain(log_target, Eigen::VectorXd::Zero(4), config, rng);
  REQUIRE(sample.draws.rows() == config.retained());
  CHECK(sample.total_iterations == config.total);
  CHECK(sample.acceptance_rate > 0.1);
  CHECK(sample.acceptance_rate < 0.5);
  for (int j = 0; j < 4; ++j) {
    double m = sample.draws.col(j).mean();
    double v = (sample.draws.col(j).array() - m).square().sum() /
               static_cast<double>(sample.draws.rows() - 1);
    CHECK(std::abs(m) < 0.08);
    CHECK(v == doctest::Approx(1.0).epsilon(0.10));
  }
  CHECK(sample.names == parameter_names(2));
}

TEST_CASE("chains are deterministic in the stream") {
  auto log_target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  ChainConfig config;
  config.total = 5000;
  config.burn_in = 1000;
  config.thinning = 4;
  RandomStream r1(4200), r2(4200), r3(4201);
  PosteriorSample a = run_chain(log_target, Eigen::VectorXd::Zero(3), config, r1);
  PosteriorSample b = run_chain(log_target, Eigen::VectorXd::Zero(3), config, r2);
  PosteriorSample c = run_chain(log_target, Eigen::VectorXd::Zero(3), config, r3);
  CHECK((a.draws - b.draws).norm() == 0.0);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK((a.draws - c.draws).norm() > 0.0);
  CHECK(a.names == std::vector<std::string>{"x1", "x2", "x3"});
}

TEST_CASE("degenerate targets and starts are rejected") {
  ChainConfig config;
  config.total = 100;
  config.burn_in = 10;
  auto neg_inf = [](const Eigen::VectorXd&) { return -std::numeric_limits<double>::infinity(); };
  RandomStream rng(4300);
  CHECK_THROWS_AS(run_chain(neg_inf, Eigen::VectorXd::Zero(2), config, rng), NonFiniteTarget);
  auto fine = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  Eigen::VectorXd bad_init(2);
  bad_init << 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(run_chain(fine, bad_init, config, rng), InvalidInput);
}

TEST_CASE("interval quantiles follow the interpolation rule") {
  std::vector<double> column(100);
  for (int i = 0; i < 100; ++i) column[static_cast<std::size_t>(i)] = i + 1;
  PosteriorSample s = sample_from_columns({column, column, column, column});
  EffectMeasure first = EffectMeasure::component(0, 2);
  auto [lo, hi] = qb_interval(s, first, 0.9);
  CHECK(lo == doctest::Approx(5.95).epsilon(1e-12));
  CHECK(hi == doctest::Approx(95.05).epsilon(1e-12));
  auto [med_lo, med_hi] = qb_interval(s, first, 0.0);
  CHECK(med_lo == doctest::Approx(50.5).epsilon(1e-12));
  CHECK(med_lo == med_hi);
  CHECK_THROWS_AS(qb_interval(s, first, 1.0), InvalidInput);
  CHECK_THROWS_AS(qb_interval(s, first, -0.1), InvalidInput);
}

TEST_CASE("odds ratio intervals are the exponential of log odds ratio intervals") {
  RandomStream rng(4400);
  std::vector<std::vector<double>> cols(4, std::vector<double>(101));
  for (int i = 0; i < 101; ++i) {
    for (int j = 0; j < 4; ++j) cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = rng.normal();
  }
  PosteriorSample s = sample_from_columns(cols);
  // 101 draws put the 0.05 and 0.95 quantiles exactly on order statistics,
  // so the monotone transform commutes with the interval construction.
  auto [log_lo, log_hi] = qb_interval(s, EffectMeasure::log_odds_ratio(), 0.9);
  auto [lo, hi] = qb_interval(s, EffectMeasure::odds_ratio(), 0.9);
  CHECK(lo == doctest::Approx(std::exp(log_lo)).epsilon(1e-13));
  CHECK(hi == doctest::Approx(std::exp(log_hi)).epsilon(1e-13));
}

TEST_CASE("h statistics count draws at or below the reference") {
  std::vector<double> column(101);
  for (int i = 0; i < 101; ++i) column[static_cast<std::size_t>(i)] = i + 1;
  PosteriorSample s = sample_from_columns({column, column, column, column});
  EffectMeasure first = EffectMeasure::component(0, 2);
  CHECK(h_statistic(s, first, 0.0) == 0.0);
  CHECK(h_statistic(s, first, 1000.0) == 1.0);
  CHECK(h_statistic(s, first, 51.0) == doctest::Approx(51.0 / 101.0).epsilon(1e-15));
  CHECK(h_statistic(s, first, 50.5) == doctest::Approx(50.0 / 101.0).epsilon(1e-15));
  CHECK_THROWS_AS(h_statistic(s, first, std::numeric_limits<double>::infinity()), InvalidInput);

  // A monotone reparametrisation of the measure preserves h.
  RandomStream rng(4500);
  std::vector<std::vector<double>> cols(4, std::vector<double>(200));
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 4; ++j) cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = rng.normal();
  }
  PosteriorSample t = sample_from_columns(cols);
  double r = 1.3;
  CHECK(h_statistic(t, EffectMeasure::odds_ratio(), r) ==
        h_statistic(t, EffectMeasure::log_odds_ratio(), std::log(r)));
}

TEST_CASE("g folds h around one half") {
  CHECK(g_statistic(0.5) == 0.0);
  CHECK(g_statistic(0.0) == 1.0);
  CHECK(g_statistic(1.0) == 1.0);
  CHECK(g_statistic(0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g_statistic(0.75) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(g_statistic(-0.01), InvalidInput);
  CHECK_THROWS_AS(g_statistic(1.01), InvalidInput);
}

TEST_CASE("the log posterior is the adjusted likelihood plus the prior") {
  MetaDataset data = small_dataset(4600);
  FitResult fit = maximize(data);
  GaussianPrior prior = GaussianPrior::standard(4);
  Adjustment none = Adjustment::none(fit);
  auto lp = log_posterior(data, none, prior);
  RandomStream rng(4601);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-1.0, 2.0);
    CHECK(lp(x) == composite_loglik(data, ThetaLog(x)) + prior.log_density(x));
  }

  Adjustment omni = Adjustment::magnitude_omnibus(fit);
  auto lp_omni = log_posterior(data, omni, prior);
  Eigen::VectorXd x = fit.theta_hat.values();
  CHECK(lp_omni(x) == doctest::Approx(omni.weight() * fit.loglik + prior.log_density(x))
                          .epsilon(1e-12));

  CHECK_THROWS_AS(log_posterior(data, none, GaussianPrior::standard(6)), InvalidInput);
}

TEST_CASE("a diffuse prior leaves likelihood differences intact") {
  MetaDataset data = small_dataset(4700);
  FitResult fit = maximize(data);
  Adjustment none = Adjustment::none(fit);
  auto lp = log_posterior(data, none, GaussianPrior::diffuse(4, 1e12));
  Eigen::VectorXd a = fit.theta_hat.values();
  Eigen::VectorXd b = a;
  b[0] += 0.5;
  b[3] -= 0.5;
  double lik_gap = composite_loglik(data, ThetaLog(a)) - composite_loglik(data, ThetaLog(b));
  CHECK(lp(a) - lp(b) == doctest::Approx(lik_gap).epsilon(1e-9));
}
