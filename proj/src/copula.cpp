#include "clbayes/copula.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "clbayes/errors.hpp"
#include "clbayes/special.hpp"

namespace clbayes {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp_open_unit(double u) {
  const double hi = 1.0 - 1.1102230246251565e-16;  // nextafter(1, 0)
  return std::clamp(u, 1e-300, hi);
}

// Adaptive Simpson quadrature.
double simpson(const std::function<double(double)>& f, double a, double m, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

// Gauss-Legendre nodes/weights on (0, 1).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Quadrature gauss_legendre_unit(int n) {
  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    q.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    q.weights[static_cast<std::size_t>(i)] = 0.5 * w;
    q.weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
  return q;
}

const Quadrature& unit_quadrature() {
  static const Quadrature q = gauss_legendre_unit(64);
  return q;
}

double spearman_of(const CopulaFamily& family) {
  const Quadrature& q = unit_quadrature();
  double total = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
      total += q.weights[i] * q.weights[j] * copula_cdf(family, q.nodes[i], q.nodes[j]);
    }
  }
  return 12.0 * total - 3.0;
}

// Increasing function inversion by bracket expansion plus bisection.
double invert_increasing(const std::function<double(double)>& f, double target, double lo,
                         double hi, double hi_cap) {
  while (f(hi) < target && hi < hi_cap) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string copula_name(CopulaKind kind) {
  switch (kind) {
    case CopulaKind::Clayton:
      return "clayton";
    case CopulaKind::Frank:
      return "frank";
    case CopulaKind::Gumbel:
      return "gumbel";
  }
  throw InvalidInput("unknown copula kind");
}

CopulaKind parse_copula(const std::string& name) {
  if (name == "clayton") return CopulaKind::Clayton;
  if (name == "frank") return CopulaKind::Frank;
  if (name == "gumbel") return CopulaKind::Gumbel;
  throw InvalidInput("unknown copula family '" + name + "'");
}

void CopulaFamily::validate() const {
  if (!std::isfinite(parameter)) throw InvalidInput("copula parameter must be finite");
  switch (kind) {
    case CopulaKind::Clayton:
      if (!(parameter > 0.0)) throw InvalidInput("Clayton parameter must be positive");
      return;
    case CopulaKind::Frank:
      if (parameter == 0.0) throw InvalidInput("Frank parameter must be non-zero");
      return;
    case CopulaKind::Gumbel:
      if (!(parameter >= 1.0)) throw InvalidInput("Gumbel parameter must be at least 1");
      return;
  }
  throw InvalidInput("unknown copula kind");
}

double copula_cdf(const CopulaFamily& family, double u, double v) {
  family.validate();
  if (!(u >= 0.0) || !(u <= 1.0) || !(v >= 0.0) || !(v <= 1.0)) {
    throw InvalidInput("copula_cdf: arguments must lie in [0, 1]");
  }
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  const double t = family.parameter;
  switch (family.kind) {
    case CopulaKind::Clayton:
      return std::pow(std::pow(u, -t) + std::pow(v, -t) - 1.0, -1.0 / t);
    case CopulaKind::Gumbel: {
      double su = std::pow(-std::log(u), t);
      double sv = std::pow(-std::log(v), t);
      return std::exp(-std::pow(su + sv, 1.0 / t));
    }
    case CopulaKind::Frank: {
      double num = std::expm1(-t * u) * std::expm1(-t * v);
      return -std::log1p(num / std::expm1(-t)) / t;
    }
  }
  throw InvalidInput("unknown copula kind");
}

double debye1(double x) {
  if (!(x > 0.0)) throw InvalidInput("debye1: argument must be positive");
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  double upper = std::min(x, 60.0);
  return integrate(f, 0.0, upper, 1e-13) / x;
}

double tau_from_param(CopulaKind kind, double parameter) {
  CopulaFamily family{kind, parameter};
  family.validate();
  switch (kind) {
    case CopulaKind::Clayton:
      return parameter / (parameter + 2.0);
    case CopulaKind::Gumbel:
      return 1.0 - 1.0 / parameter;
    case CopulaKind::Frank:
      return 1.0 - 4.0 / parameter * (1.0 - debye1(parameter));
  }
  throw InvalidInput("unknown copula kind");
}

double param_from_tau(CopulaKind kind, double tau) {
  if (!(tau > 0.0) || !(tau < 1.0)) throw InvalidInput("param_from_tau: tau must lie in (0, 1)");
  switch (kind) {
    case CopulaKind::Clayton:
      return 2.0 * tau / (1.0 - tau);
    case CopulaKind::Gumbel:
      return 1.0 / (1.0 - tau);
    case CopulaKind::Frank:
      return invert_increasing([](double t) { return tau_from_param(CopulaKind::Frank, t); }, tau,
                               1e-9, 8.0, 1e9);
  }
  throw InvalidInput("unknown copula kind");
}

double spearman_from_param(CopulaKind kind, double parameter) {
  return spearman_of(CopulaFamily{kind, parameter});
}

double param_from_spearman(CopulaKind kind, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0)) {
    throw InvalidInput("param_from_spearman: rho must lie in (0, 1)");
  }
  auto f = [kind](double t) { return spearman_from_param(kind, t); };
  switch (kind) {
    case CopulaKind::Clayton:
      return invert_increasing(f, rho, 1e-9, 8.0, 1e7);
    case CopulaKind::Gumbel:
      return 1.0 + invert_increasing([&](double t) { return f(1.0 + t); }, rho, 1e-12, 4.0, 1e6);
    case CopulaKind::Frank:
      return invert_increasing(f, rho, 1e-9, 8.0, 1e7);
  }
  throw InvalidInput("unknown copula kind");
}

std::string rank_name(RankKind kind) {
  return kind == RankKind::KendallTau ? "kendall" : "spearman";
}

RankKind parse_rank(const std::string& name) {
  if (name == "kendall" || name == "tau") return RankKind::KendallTau;
  if (name == "spearman" || name == "rho") return RankKind::SpearmanRho;
  throw InvalidInput("unknown rank correlation kind '" + name + "'");
}

double resolve_parameter(CopulaKind kind, RankKind rank, double target) {
  return rank == RankKind::KendallTau ? param_from_tau(kind, target)
                                      : param_from_spearman(kind, target);
}

std::pair<double, double> sample_pair(const CopulaFamily& family, RandomStream& rng) {
  family.validate();
  const double t = family.parameter;
  switch (family.kind) {
    case CopulaKind::Clayton: {
      // Gamma frailty: V ~ Gamma(1/t), U_j = (1 + E_j / V)^(-1/t).
      double v = rng.gamma(1.0 / t);
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      double u1 = std::exp(-std::log1p(e1 / v) / t);
      double u2 = std::exp(-std::log1p(e2 / v) / t);
      return {clamp_open_unit(u1), clamp_open_unit(u2)};
    }
    case CopulaKind::Gumbel: {
      if (t == 1.0) return {rng.uniform(), rng.uniform()};
      // Positive stable frailty with index a = 1/t (Kanter representation).
      double a = 1.0 / t;
      double w = rng.uniform(0.0, kPi);
      double e = rng.exponential();
      double v = std::sin(a * w) / std::pow(std::sin(w), 1.0 / a) *
                 std::pow(std::sin((1.0 - a) * w) / e, (1.0 - a) / a);
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      double u1 = std::exp(-std::pow(e1 / v, a));
      double u2 = std::exp(-std::pow(e2 / v, a));
      return {clamp_open_unit(u1), clamp_open_unit(u2)};
    }
    case CopulaKind::Frank: {
      // Conditional inversion given the first coordinate.  The ratio is
      // arranged so numerator and denominator are sums of positive terms;
      // the textbook log1p form cancels catastrophically for strong
      // dependence and visibly distorts the second margin.
      double u1 = rng.uniform();
      double p = rng.uniform();
      double emu = std::exp(-t * u1);
      double emt = std::exp(-t);
      double u2 = -std::log((emu * (1.0 - p) + p * emt) / (p + emu * (1.0 - p))) / t;
      return {clamp_open_unit(u1), clamp_open_unit(u2)};
    }
  }
  throw InvalidInput("unknown copula kind");
}

int phase_number(Phase phase) { return static_cast<int>(phase); }

Phase parse_phase(int number) {
  if (number == 1) return Phase::PriorTruth;
  if (number == 2) return Phase::FixedTruth;
  throw InvalidInput("phase must be 1 or 2");
}

ThetaLog theta_prime() { return ThetaLog::from_shapes({3.11, 3.94}, {2.91, 3.36}); }

ThetaLog theta_second() { return ThetaLog::from_shapes({0.5, 0.5}, {0.5, 0.5}); }

std::vector<std::array<int, 2>> log_uniform_sizes(int n_studies, std::uint64_t seed) {
  if (n_studies < 1) throw InvalidInput("log_uniform_sizes: need at least one study");
  RandomStream rng(seed);
  const double lo = std::log(20.0), hi = std::log(200.0);
  std::vector<std::array<int, 2>> sizes;
  sizes.reserve(static_cast<std::size_t>(n_studies));
  for (int i = 0; i < n_studies; ++i) {
    std::array<int, 2> row{};
    for (auto& n : row) {
      n = static_cast<int>(std::clamp(std::llround(std::exp(rng.uniform(lo, hi))), 20LL, 200LL));
    }
    sizes.push_back(row);
  }
  return sizes;
}

void SimSetting::validate() const {
  if (group_sizes.empty()) throw InvalidInput("SimSetting: group_sizes must be non-empty");
  for (const auto& row : group_sizes) {
    if (row[0] < 1 || row[1] < 1) throw InvalidInput("SimSetting: group sizes must be >= 1");
  }
  if (!(rank_target >= 0.0) || !(rank_target <= 0.999)) {
    throw InvalidInput("SimSetting: rank correlation target must lie in [0, 0.999]");
  }
  if (rank_target > 0.0) {
    CopulaFamily{family, copula_parameter()}.validate();
  }
  if (phase == Phase::PriorTruth && truth.has_value()) {
    throw InvalidInput("SimSetting: a prior-truth setting cannot pin the truth");
  }
  if (truth.has_value() && truth->groups() != 2) {
    throw InvalidInput("SimSetting: pinned truth must have two groups");
  }
}

namespace {

bool theta_close(const ThetaLog& a, const ThetaLog& b) {
  return a.dim() == b.dim() && (a.values() - b.values()).cwiseAbs().maxCoeff() < 1e-12;
}

}  // namespace

SimulatedMeta simulate_dataset(const SimSetting& setting, const GaussianPrior& truth_prior,
                               RandomStream& rng) {
  setting.validate();
  ThetaLog truth = ThetaLog::zeros(2);
  std::string label;
  if (setting.phase == Phase::PriorTruth) {
    if (truth_prior.dim() != 4) throw InvalidInput("simulate_dataset: truth prior must have dimension 4");
    truth = ThetaLog(truth_prior.sample(rng));
    label = "prior";
  } else if (setting.truth.has_value()) {
    truth = *setting.truth;
    label = theta_close(truth, theta_prime())    ? "theta_prime"
            : theta_close(truth, theta_second()) ? "theta_second"
                                                 : "fixed";
  } else {
    truth = rng.uniform() < 0.5 ? theta_prime() : theta_second();
    label = theta_close(truth, theta_prime()) ? "theta_prime" : "theta_second";
  }

  const bool dependent = setting.rank_target > 0.0;
  CopulaFamily family{setting.family, dependent ? setting.copula_parameter() : 1.0};

  std::vector<StudyRecord> studies;
  studies.reserve(setting.group_sizes.size());
  for (std::size_t i = 0; i < setting.group_sizes.size(); ++i) {
    double u1, u2;
    if (dependent) {
      std::tie(u1, u2) = sample_pair(family, rng);
    } else {
      u1 = rng.uniform();
      u2 = rng.uniform();
    }
    double p1 = sf::reg_inc_beta_inv(truth.alpha(0), truth.beta(0), u1);
    double p2 = sf::reg_inc_beta_inv(truth.alpha(1), truth.beta(1), u2);
    StudyRecord rec;
    rec.study_id = std::to_string(i + 1);
    rec.groups.push_back({setting.group_sizes[i][0], rng.binomial(setting.group_sizes[i][0], p1)});
    rec.groups.push_back({setting.group_sizes[i][1], rng.binomial(setting.group_sizes[i][1], p2)});
    studies.push_back(std::move(rec));
  }
  return {MetaDataset(std::move(studies)), truth, label};
}

}  // namespace clbayes
