#include "clbayes/prior.hpp"

#include <cmath>
#include <numbers>

#include "clbayes/errors.hpp"

namespace clbayes {

GaussianPrior::GaussianPrior(Eigen::VectorXd mean, Eigen::VectorXd sd)
    : mean_(std::move(mean)), sd_(std::move(sd)) {
  if (mean_.size() == 0 || mean_.size() != sd_.size()) {
    throw InvalidInput("GaussianPrior: mean and sd must be non-empty and equally long");
  }
  if (!mean_.allFinite() || !sd_.allFinite() || (sd_.array() <= 0.0).any()) {
    throw InvalidInput("GaussianPrior: mean must be finite and sd positive");
  }
}

GaussianPrior GaussianPrior::standard(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

GaussianPrior GaussianPrior::diffuse(int dim, double variance) {
  if (!(variance > 0.0)) throw InvalidInput("GaussianPrior: variance must be positive");
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Constant(dim, std::sqrt(variance))};
}

double GaussianPrior::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != mean_.size()) throw InvalidInput("GaussianPrior: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double z = (x[j] - mean_[j]) / sd_[j];
    total += -0.5 * z * z - std::log(sd_[j]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return total;
}

Eigen::VectorXd GaussianPrior::sample(RandomStream& rng) const {
  Eigen::VectorXd x(mean_.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = mean_[j] + sd_[j] * rng.normal();
  return x;
}

}  // namespace clbayes
