#include "clbayes/freq.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "clbayes/errors.hpp"
#include "clbayes/rng.hpp"

namespace clbayes {

Eigen::MatrixXd sensitivity(const MetaDataset& data, const ThetaLog& theta) {
  return -composite_hessian(data, theta);
}

Eigen::MatrixXd variability(const MetaDataset& data, const ThetaLog& theta) {
  Eigen::MatrixXd rows = study_scores(data, theta);
  Eigen::MatrixXd j = rows.transpose() * rows;
  return 0.5 * (j + j.transpose());
}

namespace {

// Eigendecomposition gate: symmetric, positive definite, condition number
// within the limit.  Returns the solver for reuse.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_spd(const Eigen::MatrixXd& m,
                                                           double condition_limit,
                                                           const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string(what) + ": matrix must be square and non-empty");
  }
  double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw NotSymmetric(std::string(what) + ": matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !std::isfinite(hi)) {
    throw SingularSensitivity(std::string(what) + ": matrix is not positive definite");
  }
  if (hi / lo > condition_limit) {
    throw SingularSensitivity(std::string(what) + ": condition number " + std::to_string(hi / lo) +
                              " exceeds the limit");
  }
  return es;
}

Eigen::MatrixXd spd_inverse_named(const Eigen::MatrixXd& m, double condition_limit,
                                  const char* what) {
  auto es = checked_spd(m, condition_limit, what);
  Eigen::VectorXd inv = es.eigenvalues().cwiseInverse();
  Eigen::MatrixXd out = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, double condition_limit) {
  return spd_inverse_named(m, condition_limit, "spd_inverse");
}

Eigen::MatrixXd naive_covariance(const Eigen::MatrixXd& h, double condition_limit) {
  return spd_inverse_named(h, condition_limit, "sensitivity");
}

Eigen::MatrixXd robust_covariance(const Eigen::MatrixXd& h, const Eigen::MatrixXd& j,
                                  double condition_limit) {
  Eigen::MatrixXd hinv = spd_inverse_named(h, condition_limit, "sensitivity");
  Eigen::MatrixXd v = hinv * j * hinv;
  return 0.5 * (v + v.transpose());
}

double delta_variance(const Eigen::MatrixXd& cov, const EffectMeasure& measure,
                      const ThetaLog& theta) {
  if (cov.rows() != theta.dim() || cov.cols() != theta.dim()) {
    throw InvalidInput("delta_variance: covariance dimension mismatch");
  }
  Eigen::VectorXd g = measure.gradient(theta);
  return g.dot(cov * g);
}

namespace {

void check_not_degenerate(const MetaDataset& data) {
  for (int k = 0; k < data.group_count(); ++k) {
    bool interior = false;
    for (const auto& s : data.studies()) {
      const auto& cell = s.groups[static_cast<std::size_t>(k)];
      if (cell.events > 0 && cell.events < cell.size) {
        interior = true;
        break;
      }
    }
    if (!interior) {
      throw DegenerateData("group " + std::to_string(k + 1) +
                           " has every count on the boundary (0 or the group size)");
    }
  }
}

struct AscentOutcome {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
};

// Quasi-Newton ascent with backtracking line search, finished by Newton
// corrections with the analytic Hessian.  The quasi-Newton phase is a robust
// globaliser but its steps can stall under the step tolerance while the score
// is still above tolerance; near the optimum the Newton phase closes that gap
// in a handful of iterations.
AscentOutcome ascend(const MetaDataset& data, Eigen::VectorXd x, const FitOptions& options) {
  const auto dim = x.size();
  // Trial points with a log shape below roughly -745 underflow exp to zero
  // and the cell evaluators reject them; treat such points as worthless
  // rather than letting the rejection escape the search.
  auto value = [&](const Eigen::VectorXd& v) {
    try {
      return composite_loglik(data, ThetaLog(v));
    } catch (const InvalidInput&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto grad = [&](const Eigen::VectorXd& v) {
    try {
      return composite_score(data, ThetaLog(v));
    } catch (const InvalidInput&) {
      return Eigen::VectorXd(Eigen::VectorXd::Constant(
          v.size(), std::numeric_limits<double>::quiet_NaN()));
    }
  };

  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(dim, dim);  // inverse Hessian of -loglik
  double f = value(x);
  Eigen::VectorXd g = grad(x);
  int used = 0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.cwiseAbs().maxCoeff() < options.score_tolerance) break;
    Eigen::VectorXd direction = b * g;  // ascent direction
    double slope = g.dot(direction);
    if (!(slope > 0.0) || !direction.allFinite()) {
      b.setIdentity();
      direction = g;
      slope = g.dot(g);
    }

    // Cap the trial move in log-shape units.  Uncapped steps from a steep
    // start can jump straight onto the large-shape plateau, where the score
    // vanishes and the fit would stop at a spurious stationary point.
    double step = 1.0;
    double dmax = direction.cwiseAbs().maxCoeff();
    if (dmax > 2.0) step = 2.0 / dmax;
    double f_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * direction;
      if (x_new.allFinite()) {
        f_new = value(x_new);
        if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope) {
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) break;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd g_new = grad(x_new);
    // Secant pair for the negated objective.
    Eigen::VectorXd yk = g - g_new;
    double sy = s.dot(yk);
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      Eigen::VectorXd by = b * yk;
      double yby = yk.dot(by);
      b += ((sy + yby) / (sy * sy)) * (s * s.transpose()) -
           (by * s.transpose() + s * by.transpose()) / sy;
    }
    x = x_new;
    f = f_new;
    g = g_new;
    used = iter + 1;
    if (s.cwiseAbs().maxCoeff() < options.step_tolerance) break;
  }

  for (int iter = 0; iter < 40; ++iter) {
    double gmax = g.cwiseAbs().maxCoeff();
    if (gmax < options.score_tolerance) break;
    Eigen::MatrixXd h = composite_hessian(data, ThetaLog(x));
    Eigen::VectorXd d;
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(-h));
    if (llt.info() == Eigen::Success) {
      d = llt.solve(g);
    } else {
      d = g;
    }
    if (!d.allFinite() || !(g.dot(d) > 0.0)) d = g;

    double step = 1.0;
    double dmax = d.cwiseAbs().maxCoeff();
    if (dmax > 2.0) step = 2.0 / dmax;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd x_new = x + step * d;
      // Screen through the likelihood first: a finite value guarantees the
      // shape parameters are strictly positive, so the score is evaluable.
      if (x_new.allFinite() && std::isfinite(value(x_new))) {
        Eigen::VectorXd g_new = grad(x_new);
        if (g_new.allFinite() && g_new.cwiseAbs().maxCoeff() < gmax) {
          x = x_new;
          g = g_new;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) break;
    ++used;
  }

  AscentOutcome out;
  out.x = x;
  out.iterations = used;
  out.converged = g.cwiseAbs().maxCoeff() < options.score_tolerance;
  return out;
}

}  // namespace

FitResult maximize(const MetaDataset& data, const ThetaLog& start, const FitOptions& options) {
  if (data.group_count() != start.groups()) {
    throw InvalidInput("maximize: start dimension does not match the dataset");
  }
  check_not_degenerate(data);

  // Deterministic perturbations for restarts, independent of caller state.
  RandomStream restart_rng = RandomStream::substream(0x6d61786c696bULL, 1, 0, 0);
  Eigen::VectorXd x0 = start.values();
  AscentOutcome best;
  int attempts = 0;
  for (; attempts <= options.max_restarts; ++attempts) {
    AscentOutcome out = ascend(data, x0, options);
    if (out.converged) {
      best = out;
      break;
    }
    if (attempts == options.max_restarts) {
      throw NonConvergence("composite likelihood maximisation failed after " +
                           std::to_string(attempts + 1) + " attempts");
    }
    x0 = start.values();
    for (Eigen::Index j = 0; j < x0.size(); ++j) x0[j] += restart_rng.uniform(-0.5, 0.5);
  }

  FitResult fit{ThetaLog(best.x),
                0.0,
                Eigen::MatrixXd(),
                Eigen::MatrixXd(),
                Eigen::MatrixXd(),
                Eigen::MatrixXd(),
                best.iterations,
                attempts};
  fit.loglik = composite_loglik(data, fit.theta_hat);
  fit.sensitivity = sensitivity(data, fit.theta_hat);
  fit.variability = variability(data, fit.theta_hat);
  fit.naive_cov = naive_covariance(fit.sensitivity, options.condition_limit);
  fit.robust_cov = robust_covariance(fit.sensitivity, fit.variability, options.condition_limit);
  return fit;
}

FitResult maximize(const MetaDataset& data, const FitOptions& options) {
  return maximize(data, ThetaLog::zeros(data.group_count()), options);
}

}  // namespace clbayes
