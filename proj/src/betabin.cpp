#include "clbayes/betabin.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "clbayes/errors.hpp"
#include "clbayes/special.hpp"

namespace clbayes {

ThetaLog::ThetaLog(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() == 0 || values_.size() % 2 != 0) {
    throw InvalidInput("ThetaLog: dimension must be a positive even number");
  }
  if (!values_.allFinite()) throw InvalidInput("ThetaLog: entries must be finite");
}

ThetaLog ThetaLog::zeros(int groups) {
  if (groups < 1) throw InvalidInput("ThetaLog: need at least one group");
  return ThetaLog(Eigen::VectorXd::Zero(2 * groups));
}

ThetaLog ThetaLog::from_shapes(const std::vector<double>& alphas, const std::vector<double>& betas) {
  if (alphas.size() != betas.size() || alphas.empty()) {
    throw InvalidInput("ThetaLog: shape lists must be non-empty and equally long");
  }
  Eigen::VectorXd v(2 * alphas.size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0) || !(betas[k] > 0.0)) {
      throw InvalidInput("ThetaLog: shapes must be positive");
    }
    v[static_cast<Eigen::Index>(2 * k)] = std::log(alphas[k]);
    v[static_cast<Eigen::Index>(2 * k + 1)] = std::log(betas[k]);
  }
  return ThetaLog(std::move(v));
}

std::vector<std::string> parameter_names(int groups) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(2 * groups));
  for (int k = 0; k < groups; ++k) {
    names.push_back("log_alpha" + std::to_string(k + 1));
    names.push_back("log_beta" + std::to_string(k + 1));
  }
  return names;
}

MetaDataset::MetaDataset(std::vector<StudyRecord> studies) : studies_(std::move(studies)) {
  if (studies_.empty()) throw InvalidInput("MetaDataset: need at least one study");
  const std::size_t k = studies_.front().groups.size();
  if (k == 0) throw InvalidInput("MetaDataset: studies must have at least one group");
  for (const auto& s : studies_) {
    if (s.groups.size() != k) {
      throw InvalidInput("MetaDataset: study '" + s.study_id + "' has inconsistent group count");
    }
    for (const auto& cell : s.groups) {
      if (cell.size < 1) {
        throw InvalidInput("MetaDataset: study '" + s.study_id + "' has a group of size < 1");
      }
      if (cell.events < 0 || cell.events > cell.size) {
        throw InvalidInput("MetaDataset: study '" + s.study_id + "' has events outside [0, size]");
      }
    }
  }
}

namespace {

void check_cell_args(int events, int size, double log_alpha, double log_beta) {
  if (size < 1) throw InvalidInput("beta-binomial cell: size must be >= 1");
  if (events < 0 || events > size) throw InvalidInput("beta-binomial cell: events outside [0, size]");
  if (!std::isfinite(log_alpha) || !std::isfinite(log_beta)) {
    throw InvalidInput("beta-binomial cell: log shape parameters must be finite");
  }
}

}  // namespace

double log_pmf(int events, int size, double log_alpha, double log_beta) {
  check_cell_args(events, size, log_alpha, log_beta);
  const double a = std::exp(log_alpha);
  const double b = std::exp(log_beta);
  // exp() under- or overflow leaves no usable density; report an impossible
  // point instead of feeding degenerate shapes to the special functions.
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    return -std::numeric_limits<double>::infinity();
  }
  const double y = events;
  const double n = size;
  double log_choose = std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
  return log_choose + sf::log_beta(y + a, n - y + b) - sf::log_beta(a, b);
}

Eigen::Vector2d score_cell(int events, int size, double log_alpha, double log_beta) {
  check_cell_args(events, size, log_alpha, log_beta);
  const double a = std::exp(log_alpha);
  const double b = std::exp(log_beta);
  const double y = events;
  const double n = size;
  const double psi_total = sf::digamma(n + a + b);
  const double psi_ab = sf::digamma(a + b);
  double s_a = sf::digamma(y + a) - psi_total - sf::digamma(a) + psi_ab;
  double s_b = sf::digamma(n - y + b) - psi_total - sf::digamma(b) + psi_ab;
  return {a * s_a, b * s_b};
}

Eigen::Matrix2d hessian_cell(int events, int size, double log_alpha, double log_beta) {
  check_cell_args(events, size, log_alpha, log_beta);
  const double a = std::exp(log_alpha);
  const double b = std::exp(log_beta);
  const double y = events;
  const double n = size;
  const double psi_total = sf::digamma(n + a + b);
  const double psi_ab = sf::digamma(a + b);
  const double psi1_total = sf::trigamma(n + a + b);
  const double psi1_ab = sf::trigamma(a + b);
  double s_a = sf::digamma(y + a) - psi_total - sf::digamma(a) + psi_ab;
  double s_b = sf::digamma(n - y + b) - psi_total - sf::digamma(b) + psi_ab;
  double h_aa = sf::trigamma(y + a) - psi1_total - sf::trigamma(a) + psi1_ab;
  double h_ab = psi1_ab - psi1_total;
  double h_bb = sf::trigamma(n - y + b) - psi1_total - sf::trigamma(b) + psi1_ab;
  Eigen::Matrix2d h;
  h(0, 0) = a * s_a + a * a * h_aa;
  h(0, 1) = a * b * h_ab;
  h(1, 0) = h(0, 1);
  h(1, 1) = b * s_b + b * b * h_bb;
  return h;
}

namespace {

void check_compatible(const MetaDataset& data, const ThetaLog& theta) {
  if (data.group_count() != theta.groups()) {
    throw InvalidInput("dataset has " + std::to_string(data.group_count()) +
                       " groups but theta has " + std::to_string(theta.groups()));
  }
}

}  // namespace

double composite_loglik(const MetaDataset& data, const ThetaLog& theta) {
  check_compatible(data, theta);
  double total = 0.0;
  for (const auto& s : data.studies()) {
    for (std::size_t k = 0; k < s.groups.size(); ++k) {
      const auto& cell = s.groups[k];
      total += log_pmf(cell.events, cell.size, theta.log_alpha(static_cast<int>(k)),
                       theta.log_beta(static_cast<int>(k)));
    }
  }
  return total;
}

Eigen::VectorXd composite_score(const MetaDataset& data, const ThetaLog& theta) {
  check_compatible(data, theta);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(theta.dim());
  for (const auto& s : data.studies()) {
    for (std::size_t k = 0; k < s.groups.size(); ++k) {
      const auto& cell = s.groups[k];
      Eigen::Vector2d u = score_cell(cell.events, cell.size, theta.log_alpha(static_cast<int>(k)),
                                     theta.log_beta(static_cast<int>(k)));
      score.segment<2>(static_cast<Eigen::Index>(2 * k)) += u;
    }
  }
  return score;
}

Eigen::MatrixXd study_scores(const MetaDataset& data, const ThetaLog& theta) {
  check_compatible(data, theta);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(data.study_count(), theta.dim());
  for (int i = 0; i < data.study_count(); ++i) {
    const auto& s = data.study(i);
    for (std::size_t k = 0; k < s.groups.size(); ++k) {
      const auto& cell = s.groups[k];
      Eigen::Vector2d u = score_cell(cell.events, cell.size, theta.log_alpha(static_cast<int>(k)),
                                     theta.log_beta(static_cast<int>(k)));
      rows.row(i).segment<2>(static_cast<Eigen::Index>(2 * k)) += u;
    }
  }
  return rows;
}

Eigen::MatrixXd composite_hessian(const MetaDataset& data, const ThetaLog& theta) {
  check_compatible(data, theta);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(theta.dim(), theta.dim());
  for (const auto& s : data.studies()) {
    for (std::size_t k = 0; k < s.groups.size(); ++k) {
      const auto& cell = s.groups[k];
      Eigen::Matrix2d block = hessian_cell(cell.events, cell.size,
                                           theta.log_alpha(static_cast<int>(k)),
                                           theta.log_beta(static_cast<int>(k)));
      h.block<2, 2>(static_cast<Eigen::Index>(2 * k), static_cast<Eigen::Index>(2 * k)) += block;
    }
  }
  return h;
}

double event_probability(const ThetaLog& theta, int k) {
  if (k < 0 || k >= theta.groups()) throw InvalidInput("event_probability: group index out of range");
  double a = theta.alpha(k);
  double b = theta.beta(k);
  return a / (a + b);
}

double odds(const ThetaLog& theta, int k) {
  if (k < 0 || k >= theta.groups()) throw InvalidInput("odds: group index out of range");
  return std::exp(theta.log_alpha(k) - theta.log_beta(k));
}

double odds_ratio(const ThetaLog& theta) {
  if (theta.groups() < 2) throw InvalidInput("odds_ratio: needs two groups");
  return odds(theta, 0) / odds(theta, 1);
}

double risk_difference(const ThetaLog& theta) {
  if (theta.groups() < 2) throw InvalidInput("risk_difference: needs two groups");
  return event_probability(theta, 0) - event_probability(theta, 1);
}

EffectMeasure EffectMeasure::odds_ratio() { return {Kind::OddsRatio, "dor", -1}; }
EffectMeasure EffectMeasure::log_odds_ratio() { return {Kind::LogOddsRatio, "log_dor", -1}; }
EffectMeasure EffectMeasure::risk_difference() { return {Kind::RiskDifference, "risk_diff", -1}; }

EffectMeasure EffectMeasure::event_probability(int k) {
  if (k < 0) throw InvalidInput("EffectMeasure: group index out of range");
  return {Kind::EventProbability, "pi" + std::to_string(k + 1), k};
}

EffectMeasure EffectMeasure::component(int index, int groups) {
  if (index < 0 || index >= 2 * groups) throw InvalidInput("EffectMeasure: component index out of range");
  return {Kind::Component, parameter_names(groups)[static_cast<std::size_t>(index)], index};
}

EffectMeasure EffectMeasure::parse(const std::string& name, int groups) {
  std::string s;
  s.reserve(name.size());
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "dor" || s == "odds_ratio") return odds_ratio();
  if (s == "logdor" || s == "log_dor") return log_odds_ratio();
  if (s == "riskdiff" || s == "risk_diff") return risk_difference();
  for (int k = 0; k < groups; ++k) {
    if (s == "pi" + std::to_string(k + 1)) return event_probability(k);
  }
  const auto names = parameter_names(groups);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (s == names[j]) return component(static_cast<int>(j), groups);
  }
  throw InvalidInput("unknown effect measure '" + name + "'");
}

double EffectMeasure::value(const ThetaLog& theta) const {
  switch (kind_) {
    case Kind::OddsRatio:
      return clbayes::odds_ratio(theta);
    case Kind::LogOddsRatio:
      return std::log(clbayes::odds_ratio(theta));
    case Kind::RiskDifference:
      return clbayes::risk_difference(theta);
    case Kind::EventProbability:
      return clbayes::event_probability(theta, index_);
    case Kind::Component:
      if (index_ >= theta.dim()) throw InvalidInput("EffectMeasure: component index out of range");
      return theta.values()[index_];
  }
  throw InvalidInput("EffectMeasure: unknown kind");
}

Eigen::VectorXd EffectMeasure::gradient(const ThetaLog& theta) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.dim());
  switch (kind_) {
    case Kind::OddsRatio: {
      if (theta.groups() < 2) throw InvalidInput("EffectMeasure: needs two groups");
      double rho = clbayes::odds_ratio(theta);
      g[0] = rho;
      g[1] = -rho;
      g[2] = -rho;
      g[3] = rho;
      return g;
    }
    case Kind::LogOddsRatio: {
      if (theta.groups() < 2) throw InvalidInput("EffectMeasure: needs two groups");
      g[0] = 1.0;
      g[1] = -1.0;
      g[2] = -1.0;
      g[3] = 1.0;
      return g;
    }
    case Kind::RiskDifference: {
      if (theta.groups() < 2) throw InvalidInput("EffectMeasure: needs two groups");
      double p1 = clbayes::event_probability(theta, 0);
      double p2 = clbayes::event_probability(theta, 1);
      g[0] = p1 * (1.0 - p1);
      g[1] = -p1 * (1.0 - p1);
      g[2] = -p2 * (1.0 - p2);
      g[3] = p2 * (1.0 - p2);
      return g;
    }
    case Kind::EventProbability: {
      if (index_ >= theta.groups()) throw InvalidInput("EffectMeasure: group index out of range");
      double p = clbayes::event_probability(theta, index_);
      g[2 * index_] = p * (1.0 - p);
      g[2 * index_ + 1] = -p * (1.0 - p);
      return g;
    }
    case Kind::Component:
      if (index_ >= theta.dim()) throw InvalidInput("EffectMeasure: component index out of range");
      g[index_] = 1.0;
      return g;
  }
  throw InvalidInput("EffectMeasure: unknown kind");
}

}  // namespace clbayes
