#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace clbayes {

// Unconstrained model parameter: the per-group beta shape parameters on the
// log scale, laid out as (log a_1, log b_1, ..., log a_K, log b_K).
class ThetaLog {
 public:
  explicit ThetaLog(Eigen::VectorXd values);
  static ThetaLog zeros(int groups);
  static ThetaLog from_shapes(const std::vector<double>& alphas, const std::vector<double>& betas);

  int groups() const { return static_cast<int>(values_.size()) / 2; }
  int dim() const { return static_cast<int>(values_.size()); }

  const Eigen::VectorXd& values() const { return values_; }
  double log_alpha(int k) const { return values_[2 * k]; }
  double log_beta(int k) const { return values_[2 * k + 1]; }
  double alpha(int k) const { return std::exp(values_[2 * k]); }
  double beta(int k) const { return std::exp(values_[2 * k + 1]); }

 private:
  Eigen::VectorXd values_;
};

// Names of the coordinates of ThetaLog, e.g. "log_alpha1", "log_beta1", ...
std::vector<std::string> parameter_names(int groups);

// One treatment arm of one study: y events out of n subjects.
struct GroupCell {
  int size = 0;
  int events = 0;
};

struct StudyRecord {
  std::string study_id;
  std::vector<GroupCell> groups;
};

// A collection of studies, all reporting the same K groups.
class MetaDataset {
 public:
  explicit MetaDataset(std::vector<StudyRecord> studies);

  int study_count() const { return static_cast<int>(studies_.size()); }
  int group_count() const { return static_cast<int>(studies_.front().groups.size()); }
  const StudyRecord& study(int i) const { return studies_[static_cast<std::size_t>(i)]; }
  const std::vector<StudyRecord>& studies() const { return studies_; }

 private:
  std::vector<StudyRecord> studies_;
};

// Marginal log-probability of y events out of n under the beta-binomial
// distribution with shapes (exp(log_alpha), exp(log_beta)).
double log_pmf(int events, int size, double log_alpha, double log_beta);

// Gradient of log_pmf with respect to (log_alpha, log_beta).
Eigen::Vector2d score_cell(int events, int size, double log_alpha, double log_beta);

// Hessian of log_pmf with respect to (log_alpha, log_beta).
Eigen::Matrix2d hessian_cell(int events, int size, double log_alpha, double log_beta);

// Independence composite log-likelihood: the sum of marginal cell
// log-probabilities over all studies and groups.
double composite_loglik(const MetaDataset& data, const ThetaLog& theta);

// Gradient of composite_loglik in theta.
Eigen::VectorXd composite_score(const MetaDataset& data, const ThetaLog& theta);

// Per-study score sums u_i = sum_k score of study i's cell in group k,
// stacked as rows of an N x 2K matrix.
Eigen::MatrixXd study_scores(const MetaDataset& data, const ThetaLog& theta);

// Hessian of composite_loglik (block diagonal, one 2x2 block per group).
Eigen::MatrixXd composite_hessian(const MetaDataset& data, const ThetaLog& theta);

// Group-level summaries.
double event_probability(const ThetaLog& theta, int k);  // pi_k = a_k / (a_k + b_k)
double odds(const ThetaLog& theta, int k);               // o_k = a_k / b_k
double odds_ratio(const ThetaLog& theta);                // rho = o_1 / o_2
double risk_difference(const ThetaLog& theta);           // delta = pi_1 - pi_2

// A scalar functional of theta with an analytic gradient, used for interval
// targets and magnitude tuning.
class EffectMeasure {
 public:
  enum class Kind { OddsRatio, LogOddsRatio, RiskDifference, EventProbability, Component };

  static EffectMeasure odds_ratio();
  static EffectMeasure log_odds_ratio();
  static EffectMeasure risk_difference();
  static EffectMeasure event_probability(int k);
  static EffectMeasure component(int index, int groups);

  // Accepts "dor", "logdor", "riskdiff", "pi1", "pi2" and coordinate names
  // such as "log_alpha1".
  static EffectMeasure parse(const std::string& name, int groups = 2);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double value(const ThetaLog& theta) const;
  Eigen::VectorXd gradient(const ThetaLog& theta) const;

 private:
  EffectMeasure(Kind kind, std::string name, int index) : kind_(kind), name_(std::move(name)), index_(index) {}
  Kind kind_;
  std::string name_;
  int index_ = -1;
};

}  // namespace clbayes
