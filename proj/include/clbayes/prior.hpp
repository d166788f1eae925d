#pragma once

#include <Eigen/Dense>

#include "clbayes/rng.hpp"

namespace clbayes {

// Independent normal prior on each coordinate of the log-scale parameter.
class GaussianPrior {
 public:
  GaussianPrior(Eigen::VectorXd mean, Eigen::VectorXd sd);

  // N(0, 1) and N(0, variance) priors on every coordinate.
  static GaussianPrior standard(int dim);
  static GaussianPrior diffuse(int dim, double variance);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& sd() const { return sd_; }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(RandomStream& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd sd_;
};

}  // namespace clbayes
