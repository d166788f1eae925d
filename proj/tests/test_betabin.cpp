#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "clbayes/betabin.hpp"
#include "clbayes/errors.hpp"
#include "clbayes/rng.hpp"
#include "clbayes/special.hpp"
#include "doctest.h"

using namespace clbayes;

namespace {

// Quadrature oracle for the beta-binomial cell probability: integral over p
// of C(n,y) p^y (1-p)^(n-y) times the Beta(a,b) density.  tanh-sinh copes
// with the integrable endpoint singularities when a or b is below one.
double cell_prob_quadrature(int y, int n, double a, double b) {
  auto integrand = [&](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    double lp = std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0) +
                y * std::log(p) + (n - y) * std::log1p(-p) + (a - 1.0) * std::log(p) +
                (b - 1.0) * std::log1p(-p) - sf::log_beta(a, b);
    return std::exp(lp);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, 0.0, 1.0, 1e-12);
}

ThetaLog random_theta(RandomStream& rng, int groups = 2) {
  Eigen::VectorXd v(2 * groups);
  for (int i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.5, 2.5);
  return ThetaLog(v);
}

MetaDataset random_dataset(RandomStream& rng, int studies = 8) {
  std::vector<StudyRecord> recs;
  for (int i = 0; i < studies; ++i) {
    StudyRecord r;
    r.study_id = std::to_string(i + 1);
    for (int k = 0; k < 2; ++k) {
      int n = 5 + static_cast<int>(rng.uniform(0.0, 60.0));
      int y = 1 + static_cast<int>(rng.uniform(0.0, static_cast<double>(n - 1)));
      r.groups.push_back({n, y});
    }
    recs.push_back(r);
  }
  return MetaDataset(recs);
}

}  // namespace

TEST_CASE("ThetaLog validates and orders its entries") {
  ThetaLog t = ThetaLog::from_shapes({3.11, 3.94}, {2.91, 3.36});
  CHECK(t.groups() == 2);
  CHECK(t.dim() == 4);
  CHECK(t.alpha(0) == doctest::Approx(3.11).epsilon(1e-15));
  CHECK(t.beta(1) == doctest::Approx(3.36).epsilon(1e-15));
  CHECK(t.log_alpha(1) == doctest::Approx(std::log(3.94)).epsilon(1e-15));

  CHECK_THROWS_AS(ThetaLog(Eigen::VectorXd::Zero(3)), InvalidInput);
  CHECK_THROWS_AS(ThetaLog(Eigen::VectorXd::Zero(0)), InvalidInput);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
  bad[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ThetaLog{bad}, InvalidInput);
  CHECK(parameter_names(2) ==
        std::vector<std::string>{"log_alpha1", "log_beta1", "log_alpha2", "log_beta2"});
}

TEST_CASE("MetaDataset validates its records") {
  CHECK_THROWS_AS(MetaDataset({}), InvalidInput);
  StudyRecord bad_count{"1", {{10, 11}, {10, 2}}};
  CHECK_THROWS_AS(MetaDataset({bad_count}), InvalidInput);
  StudyRecord a{"1", {{10, 3}, {12, 4}}};
  StudyRecord mismatched{"2", {{10, 3}}};
  CHECK_THROWS_AS(MetaDataset({a, mismatched}), InvalidInput);
  MetaDataset ok({a});
  CHECK(ok.study_count() == 1);
  CHECK(ok.group_count() == 2);
}

TEST_CASE("log_pmf closed-form cases") {
  // Unit shapes make the count uniform on {0..n}.
  CHECK(log_pmf(1, 1, 0.0, 0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(log_pmf(3, 9, 0.0, 0.0) == doctest::Approx(std::log(0.1)).epsilon(1e-14));
  // Cells need at least one trial.
  CHECK_THROWS_AS(log_pmf(0, 0, 1.7, -0.4), InvalidInput);
  CHECK_THROWS_AS(log_pmf(5, 4, 0.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(log_pmf(-1, 4, 0.0, 0.0), InvalidInput);
}

TEST_CASE("log_pmf matches the quadrature oracle") {
  CHECK(std::abs(std::exp(log_pmf(3, 10, std::log(2.0), std::log(5.0))) -
                 cell_prob_quadrature(3, 10, 2.0, 5.0)) < 1e-8);
  RandomStream rng(41);
  for (int i = 0; i < 25; ++i) {
    int n = 1 + static_cast<int>(rng.uniform(0.0, 30.0));
    int y = static_cast<int>(rng.uniform(0.0, n + 1.0));
    double a = std::exp(rng.uniform(-1.0, 2.0));
    double b = std::exp(rng.uniform(-1.0, 2.0));
    CHECK(std::abs(std::exp(log_pmf(y, n, std::log(a), std::log(b))) -
                   cell_prob_quadrature(y, n, a, b)) < 1e-8);
  }
}

TEST_CASE("log_pmf sums to one over the support") {
  RandomStream rng(42);
  for (int i = 0; i < 300; ++i) {
    int n = 1 + static_cast<int>(rng.uniform(0.0, 50.0));
    double la = rng.uniform(std::log(0.05), std::log(50.0));
    double lb = rng.uniform(std::log(0.05), std::log(50.0));
    double sum = 0.0;
    for (int y = 0; y <= n; ++y) sum += std::exp(log_pmf(y, n, la, lb));
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
}

TEST_CASE("score closed forms and finite differences") {
  Eigen::Vector2d s = score_cell(1, 1, 0.0, 0.0);
  CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_THROWS_AS(score_cell(0, 0, 0.7, -0.3), InvalidInput);

  RandomStream rng(43);
  const double h = 1e-6;
  for (int i = 0; i < 300; ++i) {
    int n = 1 + static_cast<int>(rng.uniform(0.0, 50.0));
    int y = static_cast<int>(rng.uniform(0.0, n + 1.0));
    double la = rng.uniform(-2.0, 2.5);
    double lb = rng.uniform(-2.0, 2.5);
    Eigen::Vector2d analytic = score_cell(y, n, la, lb);
    Eigen::Vector2d fd;
    fd[0] = (log_pmf(y, n, la + h, lb) - log_pmf(y, n, la - h, lb)) / (2 * h);
    fd[1] = (log_pmf(y, n, la, lb + h) - log_pmf(y, n, la, lb - h)) / (2 * h);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(analytic[j] - fd[j]) <= 1e-6 * std::max(1.0, std::abs(analytic[j])));
    }
  }
}

TEST_CASE("score has zero expectation over the support") {
  for (auto [n, a, b] : {std::tuple{20, 1.3, 0.7}, std::tuple{12, 4.0, 2.5}, std::tuple{5, 0.3, 6.0}}) {
    double la = std::log(a), lb = std::log(b);
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (int y = 0; y <= n; ++y) sum += std::exp(log_pmf(y, n, la, lb)) * score_cell(y, n, la, lb);
    CHECK(std::abs(sum[0]) < 1e-8);
    CHECK(std::abs(sum[1]) < 1e-8);
  }
}

TEST_CASE("hessian_cell matches finite differences of the score") {
  RandomStream rng(44);
  const double h = 1e-6;
  for (int i = 0; i < 300; ++i) {
    int n = 1 + static_cast<int>(rng.uniform(0.0, 50.0));
    int y = static_cast<int>(rng.uniform(0.0, n + 1.0));
    double la = rng.uniform(-2.0, 2.5);
    double lb = rng.uniform(-2.0, 2.5);
    Eigen::Matrix2d analytic = hessian_cell(y, n, la, lb);
    Eigen::Matrix2d fd;
    fd.col(0) = (score_cell(y, n, la + h, lb) - score_cell(y, n, la - h, lb)) / (2 * h);
    fd.col(1) = (score_cell(y, n, la, lb + h) - score_cell(y, n, la, lb - h)) / (2 * h);
    double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-5 * scale);
    CHECK(analytic(0, 1) == doctest::Approx(analytic(1, 0)).epsilon(1e-12));
  }
}

TEST_CASE("composite log-likelihood adds over studies and groups") {
  StudyRecord one{"1", {{1, 1}}};
  MetaDataset single({one});
  ThetaLog unit = ThetaLog::zeros(1);
  CHECK(composite_loglik(single, unit) == doctest::Approx(std::log(0.5)).epsilon(1e-14));

  RandomStream rng(45);
  MetaDataset data = random_dataset(rng);
  ThetaLog theta = random_theta(rng);
  std::vector<StudyRecord> twice = data.studies();
  for (const auto& s : data.studies()) twice.push_back(s);
  CHECK(composite_loglik(MetaDataset(twice), theta) ==
        doctest::Approx(2.0 * composite_loglik(data, theta)).epsilon(1e-14));

  double cells = 0.0;
  for (const auto& s : data.studies()) {
    for (int k = 0; k < 2; ++k) {
      cells += log_pmf(s.groups[k].events, s.groups[k].size, theta.log_alpha(k), theta.log_beta(k));
    }
  }
  CHECK(composite_loglik(data, theta) == doctest::Approx(cells).epsilon(1e-14));
}

TEST_CASE("composite score and hessian match finite differences") {
  RandomStream rng(46);
  MetaDataset data = random_dataset(rng);
  ThetaLog theta = random_theta(rng);
  const double h = 1e-6;
  Eigen::VectorXd g = composite_score(data, theta);
  Eigen::MatrixXd hess = composite_hessian(data, theta);
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd up = theta.values(), dn = theta.values();
    up[j] += h;
    dn[j] -= h;
    double fd = (composite_loglik(data, ThetaLog(up)) - composite_loglik(data, ThetaLog(dn))) / (2 * h);
    CHECK(std::abs(g[j] - fd) <= 1e-6 * std::max(1.0, std::abs(g[j])));
    Eigen::VectorXd fcol = (composite_score(data, ThetaLog(up)) - composite_score(data, ThetaLog(dn))) / (2 * h);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(hess(i, j) - fcol[i]) <= 1e-5 * std::max(1.0, hess.cwiseAbs().maxCoeff()));
    }
  }
  // Disjoint per-group parameters: the cross-group blocks are exactly zero.
  CHECK(hess(0, 2) == 0.0);
  CHECK(hess(0, 3) == 0.0);
  CHECK(hess(1, 2) == 0.0);
  CHECK(hess(1, 3) == 0.0);

  // Per-study rows of the score matrix sum to the total score.
  Eigen::MatrixXd rows = study_scores(data, theta);
  CHECK(rows.rows() == data.study_count());
  CHECK((rows.colwise().sum().transpose() - g).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("group summaries at the symmetric configuration") {
  ThetaLog second = ThetaLog::from_shapes({0.5, 0.5}, {0.5, 0.5});
  CHECK(event_probability(second, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(event_probability(second, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(odds_ratio(second) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(risk_difference(second)) < 1e-15);
}

TEST_CASE("group summaries at the asymmetric configuration") {
  ThetaLog prime = ThetaLog::from_shapes({3.11, 3.94}, {2.91, 3.36});
  CHECK(event_probability(prime, 0) == doctest::Approx(3.11 / 6.02).epsilon(1e-14));
  CHECK(event_probability(prime, 0) == doctest::Approx(0.5166112956810631).epsilon(1e-14));
  CHECK(odds(prime, 0) == doctest::Approx(3.11 / 2.91).epsilon(1e-14));
  CHECK(odds_ratio(prime) == doctest::Approx((3.11 / 2.91) / (3.94 / 3.36)).epsilon(1e-14));
  CHECK(odds_ratio(prime) == doctest::Approx(0.9114030038201894).epsilon(1e-14));
  CHECK(risk_difference(prime) ==
        doctest::Approx(3.11 / 6.02 - 3.94 / 7.30).epsilon(1e-13));
}

TEST_CASE("swapping the group labels inverts the odds ratio") {
  ThetaLog t = ThetaLog::from_shapes({2.2, 0.7}, {0.7, 2.2});
  ThetaLog swapped = ThetaLog::from_shapes({0.7, 2.2}, {2.2, 0.7});
  CHECK(odds_ratio(t) * odds_ratio(swapped) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("effect measures expose values consistent with the summaries") {
  RandomStream rng(47);
  ThetaLog theta = random_theta(rng);
  CHECK(EffectMeasure::odds_ratio().value(theta) == odds_ratio(theta));
  CHECK(EffectMeasure::log_odds_ratio().value(theta) == doctest::Approx(std::log(odds_ratio(theta))).epsilon(1e-15));
  CHECK(EffectMeasure::risk_difference().value(theta) == risk_difference(theta));
  CHECK(EffectMeasure::event_probability(1).value(theta) == event_probability(theta, 1));
  CHECK(EffectMeasure::component(2, 2).value(theta) == theta.values()[2]);
  // The ratio and its logarithm stay consistent to full precision.
  CHECK(std::exp(EffectMeasure::log_odds_ratio().value(theta)) ==
        doctest::Approx(EffectMeasure::odds_ratio().value(theta)).epsilon(1e-12));
}

TEST_CASE("effect measure gradients match finite differences") {
  RandomStream rng(48);
  const double h = 1e-6;
  std::vector<EffectMeasure> measures{
      EffectMeasure::odds_ratio(),       EffectMeasure::log_odds_ratio(),
      EffectMeasure::risk_difference(),  EffectMeasure::event_probability(0),
      EffectMeasure::component(3, 2)};
  for (int rep = 0; rep < 25; ++rep) {
    ThetaLog theta = random_theta(rng);
    for (const auto& m : measures) {
      Eigen::VectorXd g = m.gradient(theta);
      for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd up = theta.values(), dn = theta.values();
        up[j] += h;
        dn[j] -= h;
        double fd = (m.value(ThetaLog(up)) - m.value(ThetaLog(dn))) / (2 * h);
        CHECK(std::abs(g[j] - fd) <= 1e-6 * std::max(1.0, std::abs(g[j])));
      }
    }
  }
}

TEST_CASE("odds ratio gradient direction at the symmetric point") {
  ThetaLog second = ThetaLog::from_shapes({0.5, 0.5}, {0.5, 0.5});
  Eigen::VectorXd g = EffectMeasure::odds_ratio().gradient(second);
  // rho = 1 there, so the gradient is exactly the signed pattern.
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(g[2] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(g[3] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("log odds ratio gradient is the odds ratio gradient over rho") {
  RandomStream rng(49);
  ThetaLog theta = random_theta(rng);
  Eigen::VectorXd gd = EffectMeasure::odds_ratio().gradient(theta);
  Eigen::VectorXd gl = EffectMeasure::log_odds_ratio().gradient(theta);
  double rho = odds_ratio(theta);
  CHECK((gd / rho - gl).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("risk difference gradient aligns with the log ratio gradient when the probabilities match") {
  // Equal event probabilities with different spreads.
  ThetaLog t = ThetaLog::from_shapes({2.0, 4.0}, {3.0, 6.0});
  REQUIRE(event_probability(t, 0) == doctest::Approx(event_probability(t, 1)).epsilon(1e-14));
  Eigen::VectorXd gd = EffectMeasure::risk_difference().gradient(t);
  Eigen::VectorXd gl = EffectMeasure::log_odds_ratio().gradient(t);
  double cosine = gd.dot(gl) / (gd.norm() * gl.norm());
  CHECK(std::abs(std::abs(cosine) - 1.0) < 1e-8);
}

TEST_CASE("effect measure parsing accepts the documented spellings") {
  CHECK(EffectMeasure::parse("dor").kind() == EffectMeasure::Kind::OddsRatio);
  CHECK(EffectMeasure::parse("odds_ratio").kind() == EffectMeasure::Kind::OddsRatio);
  CHECK(EffectMeasure::parse("logdor").kind() == EffectMeasure::Kind::LogOddsRatio);
  CHECK(EffectMeasure::parse("log_dor").kind() == EffectMeasure::Kind::LogOddsRatio);
  CHECK(EffectMeasure::parse("riskdiff").kind() == EffectMeasure::Kind::RiskDifference);
  CHECK(EffectMeasure::parse("risk_diff").kind() == EffectMeasure::Kind::RiskDifference);
  CHECK(EffectMeasure::parse("pi1").kind() == EffectMeasure::Kind::EventProbability);
  CHECK(EffectMeasure::parse("log_beta2").kind() == EffectMeasure::Kind::Component);
  CHECK(EffectMeasure::parse("log_beta2").name() == "log_beta2");
  CHECK_THROWS_AS(EffectMeasure::parse("nope"), InvalidInput);
}
