#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "clbayes/betabin.hpp"
#include "clbayes/freq.hpp"

namespace clbayes {

// Symmetric positive semi-definite square root: M = S S with S symmetric.
// Eigenvalues in [-1e-10 * trace, 0) are clamped to zero; anything more
// negative raises NotPositiveDefinite.
Eigen::MatrixXd zca_sqrt(const Eigen::MatrixXd& m);

// Correlation-scaled root of the inverse of a covariance matrix sigma:
// W = P^(-1/2) D^(-1/2) with D = diag(sigma) and P the correlation matrix,
// so that W' W = sigma^(-1).  Equivariant under diagonal rescaling of sigma.
Eigen::MatrixXd zca_cor_sqrt_inv(const Eigen::MatrixXd& sigma);

enum class AdjustKind { None, CurvatureZca, CurvatureZcaCor, MagnitudeOmnibus, MagnitudeTargeted };

std::string adjust_name(AdjustKind kind);

// A tuned adjustment of the composite log-likelihood around a fit:
//   none:       l(theta)
//   curvature:  l(A (theta - theta_hat) + theta_hat)
//   magnitude:  w * l(theta)
class Adjustment {
 public:
  static Adjustment none(const FitResult& fit);
  static Adjustment curvature(const FitResult& fit, AdjustKind variant);
  static Adjustment magnitude_omnibus(const FitResult& fit);
  static Adjustment magnitude_targeted(const FitResult& fit, const EffectMeasure& target);

  AdjustKind kind() const { return kind_; }
  const ThetaLog& anchor() const { return anchor_; }
  double weight() const { return weight_; }
  const Eigen::MatrixXd& linear_map() const;  // curvature kinds only
  const std::optional<EffectMeasure>& target() const { return target_; }

  // The adjusted composite log-likelihood at theta.
  double loglik(const MetaDataset& data, const ThetaLog& theta) const;

 private:
  Adjustment(AdjustKind kind, ThetaLog anchor) : kind_(kind), anchor_(std::move(anchor)) {}
  AdjustKind kind_;
  ThetaLog anchor_;
  double weight_ = 1.0;
  Eigen::MatrixXd map_;
  std::optional<EffectMeasure> target_;
};

// Curvature matrix A = W_N^(-1) W_V where W_N and W_V are the selected roots
// of N-hat^(-1) and V-hat^(-1).
Eigen::MatrixXd curvature_map(const FitResult& fit, AdjustKind variant);

// Omnibus weight w = dim / trace(N-hat^(-1) V-hat).
double omnibus_weight(const FitResult& fit);

// Targeted weight w = N_eta / V_eta (delta-method variances of the target).
double targeted_weight(const FitResult& fit, const EffectMeasure& target);

}  // namespace clbayes
