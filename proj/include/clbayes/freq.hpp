#pragma once

#include <Eigen/Dense>

#include "clbayes/betabin.hpp"

namespace clbayes {

struct FitOptions {
  double score_tolerance = 1e-6;  // max-norm of the score at the maximum
  double step_tolerance = 1e-8;   // max-norm of the parameter step
  int max_iterations = 500;
  int max_restarts = 5;           // perturbed restarts before giving up
  double condition_limit = 1e12;  // sensitivity condition number ceiling
};

struct FitResult {
  ThetaLog theta_hat;
  double loglik = 0.0;
  Eigen::MatrixXd sensitivity;  // H-hat: negative Hessian of the composite log-likelihood
  Eigen::MatrixXd variability;  // J-hat: sum of per-study score outer products
  Eigen::MatrixXd naive_cov;    // N-hat = H-hat^(-1)
  Eigen::MatrixXd robust_cov;   // V-hat = H-hat^(-1) J-hat H-hat^(-1)
  int iterations = 0;
  int restarts = 0;
};

// H-hat at theta: the negative Hessian of the composite log-likelihood.
Eigen::MatrixXd sensitivity(const MetaDataset& data, const ThetaLog& theta);

// J-hat at theta: sum over studies of the outer product of per-study score
// sums.
Eigen::MatrixXd variability(const MetaDataset& data, const ThetaLog& theta);

// Inverse of a symmetric positive definite matrix, with symmetry,
// definiteness and conditioning checks.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, double condition_limit = 1e12);

// N-hat = H^(-1); requires H symmetric positive definite with condition
// number below the limit.
Eigen::MatrixXd naive_covariance(const Eigen::MatrixXd& h, double condition_limit = 1e12);

// V-hat = H^(-1) J H^(-1), symmetrised.
Eigen::MatrixXd robust_covariance(const Eigen::MatrixXd& h, const Eigen::MatrixXd& j,
                                  double condition_limit = 1e12);

// Delta-method variance of a scalar measure: grad' cov grad.
double delta_variance(const Eigen::MatrixXd& cov, const EffectMeasure& measure,
                      const ThetaLog& theta);

// Maximise the composite log-likelihood by BFGS with backtracking line
// search, starting from `start` (zeros by default) with deterministic
// perturbed restarts on failure.  Throws DegenerateData when a group has all
// of its counts on the boundary, NonConvergence when the tolerances cannot
// be met, and SingularSensitivity when H-hat at the maximum is not usable.
FitResult maximize(const MetaDataset& data, const ThetaLog& start, const FitOptions& options = {});
FitResult maximize(const MetaDataset& data, const FitOptions& options = {});

}  // namespace clbayes
