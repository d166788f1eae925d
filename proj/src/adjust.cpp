#include "clbayes/adjust.hpp"

#include <cmath>

#include "clbayes/errors.hpp"

namespace clbayes {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> symmetric_eigen(const Eigen::MatrixXd& m,
                                                               const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string(what) + ": matrix must be square and non-empty");
  }
  double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw NotSymmetric(std::string(what) + ": matrix is not symmetric");
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (m + m.transpose()));
}

}  // namespace

Eigen::MatrixXd zca_sqrt(const Eigen::MatrixXd& m) {
  auto es = symmetric_eigen(m, "zca_sqrt");
  const double floor = -1e-10 * std::abs(m.trace());
  Eigen::VectorXd lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < floor) {
      throw NotPositiveDefinite("zca_sqrt: eigenvalue " + std::to_string(lambda[i]) +
                                " below the clamping floor");
    }
    lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
  }
  Eigen::MatrixXd s = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd zca_cor_sqrt_inv(const Eigen::MatrixXd& sigma) {
  auto es = symmetric_eigen(sigma, "zca_cor_sqrt_inv");
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw NotPositiveDefinite("zca_cor_sqrt_inv: covariance must be positive definite");
  }
  Eigen::VectorXd d = sigma.diagonal();
  Eigen::VectorXd dinv_sqrt = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = dinv_sqrt.asDiagonal() * sigma * dinv_sqrt.asDiagonal();
  corr = 0.5 * (corr + corr.transpose());
  auto esc = symmetric_eigen(corr, "zca_cor_sqrt_inv");
  Eigen::VectorXd lambda = esc.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) {
    throw NotPositiveDefinite("zca_cor_sqrt_inv: correlation matrix must be positive definite");
  }
  Eigen::MatrixXd p_inv_sqrt = esc.eigenvectors() *
                               lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
                               esc.eigenvectors().transpose();
  p_inv_sqrt = 0.5 * (p_inv_sqrt + p_inv_sqrt.transpose());
  return p_inv_sqrt * dinv_sqrt.asDiagonal();
}

std::string adjust_name(AdjustKind kind) {
  switch (kind) {
    case AdjustKind::None:
      return "none";
    case AdjustKind::CurvatureZca:
      return "curvature_zca";
    case AdjustKind::CurvatureZcaCor:
      return "curvature_zcacor";
    case AdjustKind::MagnitudeOmnibus:
      return "magnitude_omnibus";
    case AdjustKind::MagnitudeTargeted:
      return "magnitude_targeted";
  }
  throw InvalidInput("unknown adjustment kind");
}

Eigen::MatrixXd curvature_map(const FitResult& fit, AdjustKind variant) {
  Eigen::MatrixXd w_n, w_v;
  if (variant == AdjustKind::CurvatureZca) {
    // Roots of the inverse covariances; N-hat^(-1) is the sensitivity itself.
    w_n = zca_sqrt(fit.sensitivity);
    w_v = zca_sqrt(spd_inverse(fit.robust_cov));
  } else if (variant == AdjustKind::CurvatureZcaCor) {
    w_n = zca_cor_sqrt_inv(fit.naive_cov);
    w_v = zca_cor_sqrt_inv(fit.robust_cov);
  } else {
    throw InvalidInput("curvature_map: variant must be a curvature kind");
  }
  return w_n.partialPivLu().solve(w_v);
}

double omnibus_weight(const FitResult& fit) {
  // trace(N-hat^(-1) V-hat) = trace(H-hat^(-1) J-hat).
  Eigen::MatrixXd x = fit.sensitivity.ldlt().solve(fit.variability);
  double tr = x.trace();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw NotPositiveDefinite("omnibus_weight: trace of N^(-1) V must be positive");
  }
  return static_cast<double>(fit.sensitivity.rows()) / tr;
}

double targeted_weight(const FitResult& fit, const EffectMeasure& target) {
  double n_eta = delta_variance(fit.naive_cov, target, fit.theta_hat);
  double v_eta = delta_variance(fit.robust_cov, target, fit.theta_hat);
  double gnorm = target.gradient(fit.theta_hat).cwiseAbs().maxCoeff();
  if (!(gnorm > 0.0)) throw ZeroGradient("targeted_weight: the target gradient vanishes");
  if (!(n_eta > 0.0) || !(v_eta > 0.0)) {
    throw NotPositiveDefinite("targeted_weight: delta-method variances must be positive");
  }
  return n_eta / v_eta;
}

Adjustment Adjustment::none(const FitResult& fit) {
  return Adjustment(AdjustKind::None, fit.theta_hat);
}

Adjustment Adjustment::curvature(const FitResult& fit, AdjustKind variant) {
  Adjustment adj(variant, fit.theta_hat);
  adj.map_ = curvature_map(fit, variant);
  return adj;
}

Adjustment Adjustment::magnitude_omnibus(const FitResult& fit) {
  Adjustment adj(AdjustKind::MagnitudeOmnibus, fit.theta_hat);
  adj.weight_ = omnibus_weight(fit);
  return adj;
}

Adjustment Adjustment::magnitude_targeted(const FitResult& fit, const EffectMeasure& target) {
  Adjustment adj(AdjustKind::MagnitudeTargeted, fit.theta_hat);
  adj.weight_ = targeted_weight(fit, target);
  adj.target_ = target;
  return adj;
}

const Eigen::MatrixXd& Adjustment::linear_map() const {
  if (kind_ != AdjustKind::CurvatureZca && kind_ != AdjustKind::CurvatureZcaCor) {
    throw InvalidInput("Adjustment: only curvature adjustments carry a linear map");
  }
  return map_;
}

double Adjustment::loglik(const MetaDataset& data, const ThetaLog& theta) const {
  switch (kind_) {
    case AdjustKind::None:
      return composite_loglik(data, theta);
    case AdjustKind::CurvatureZca:
    case AdjustKind::CurvatureZcaCor: {
      Eigen::VectorXd mapped =
          map_ * (theta.values() - anchor_.values()) + anchor_.values();
      return composite_loglik(data, ThetaLog(mapped));
    }
    case AdjustKind::MagnitudeOmnibus:
    case AdjustKind::MagnitudeTargeted:
      return weight_ * composite_loglik(data, theta);
  }
  throw InvalidInput("Adjustment: unknown kind");
}

}  // namespace clbayes
