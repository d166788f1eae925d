#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clbayes/betabin.hpp"
#include "clbayes/prior.hpp"
#include "clbayes/rng.hpp"

namespace clbayes {

enum class CopulaKind { Clayton, Frank, Gumbel };

std::string copula_name(CopulaKind kind);
CopulaKind parse_copula(const std::string& name);

// Archimedean copula with its natural dependence parameter.
struct CopulaFamily {
  CopulaKind kind;
  double parameter;
  void validate() const;  // Clayton > 0, Frank != 0, Gumbel >= 1
};

// Bivariate copula CDF C(u, v).
double copula_cdf(const CopulaFamily& family, double u, double v);

// Dependence parameter from Kendall tau (tau in (0, 1)): closed forms for
// Clayton and Gumbel, numeric inversion of the Debye-function identity for
// Frank.
double param_from_tau(CopulaKind kind, double tau);
double tau_from_param(CopulaKind kind, double parameter);

// Dependence parameter from Spearman rho (rho in (0, 1)): numeric inversion
// of rho_S = 12 int int C(u, v) du dv - 3 for every family.
double param_from_spearman(CopulaKind kind, double rho);
double spearman_from_param(CopulaKind kind, double parameter);

// Which rank-correlation scale a simulation setting is specified on.
enum class RankKind { KendallTau, SpearmanRho };

std::string rank_name(RankKind kind);
RankKind parse_rank(const std::string& name);

double resolve_parameter(CopulaKind kind, RankKind rank, double target);

// One draw (u1, u2) from the copula, both coordinates in (0, 1).
std::pair<double, double> sample_pair(const CopulaFamily& family, RandomStream& rng);

// First Debye function D1(x) = (1/x) int_0^x t / (e^t - 1) dt, x > 0.
double debye1(double x);

// Simulation phases: truth drawn fresh from the prior per replication, or
// held at a fixed configuration.
enum class Phase { PriorTruth = 1, FixedTruth = 2 };

int phase_number(Phase phase);
Phase parse_phase(int number);

// The two fixed truth configurations used by FixedTruth studies.
ThetaLog theta_prime();   // shapes (3.11, 2.91, 3.94, 3.36)
ThetaLog theta_second();  // shapes (0.5, 0.5, 0.5, 0.5)

// Group sizes for n_studies studies, each drawn once from a seeded
// log-uniform distribution on [20, 200].
std::vector<std::array<int, 2>> log_uniform_sizes(int n_studies, std::uint64_t seed);

// One point of the simulation grid.
struct SimSetting {
  std::string id;
  CopulaKind family = CopulaKind::Clayton;
  RankKind rank_kind = RankKind::KendallTau;
  double rank_target = 0.0;  // 0 means independent groups
  Phase phase = Phase::PriorTruth;
  // FixedTruth only: pin the truth; when empty the truth is theta_prime or
  // theta_second with equal probability, fresh per replication.
  std::optional<ThetaLog> truth;
  std::vector<std::array<int, 2>> group_sizes;

  void validate() const;
  double copula_parameter() const { return resolve_parameter(family, rank_kind, rank_target); }
};

struct SimulatedMeta {
  MetaDataset data;
  ThetaLog truth;
  std::string truth_label;  // "prior", "theta_prime" or "theta_second"
};

// Draw the truth (from truth_prior in the PriorTruth phase), then for each
// study draw a dependent pair of beta event probabilities through the copula
// and binomial event counts for both groups.
SimulatedMeta simulate_dataset(const SimSetting& setting, const GaussianPrior& truth_prior,
                               RandomStream& rng);

}  // namespace clbayes
