#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clbayes/adjust.hpp"
#include "clbayes/copula.hpp"
#include "clbayes/posterior.hpp"
#include "clbayes/stats.hpp"

namespace clbayes {

// A posterior-adjustment method to run in a calibration study.
struct MethodSpec {
  AdjustKind kind = AdjustKind::None;
  std::optional<EffectMeasure> target;  // MagnitudeTargeted only

  // "none", "curvature_zca", "curvature_zcacor", "magnitude_omnibus",
  // "magnitude_targeted:<measure>".
  std::string label() const;
  static MethodSpec parse(const std::string& text);

  void validate() const;
  Adjustment tune(const FitResult& fit) const;
};

struct MeasureStat {
  std::string measure;
  double h = 0.0;
  double g = 0.0;
};

// One (setting, replication, method) outcome.
struct CalibrationRecord {
  std::string setting_id;
  CopulaKind family = CopulaKind::Clayton;
  RankKind rank_kind = RankKind::KendallTau;
  double rank_target = 0.0;
  Phase phase = Phase::PriorTruth;
  std::string theta_label;
  int replication = 0;  // 1-based
  std::string method;
  std::vector<MeasureStat> stats;  // empty when the replication failed
  bool fit_ok = false;
  std::string failure;
};

struct StudyConfig {
  std::vector<SimSetting> settings;
  std::vector<MethodSpec> methods;
  std::vector<EffectMeasure> monitored;  // defaults to log_alpha1, dor, risk_diff
  int replications = 1000;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  ChainConfig chain;
  double diffuse_variance = 1e4;  // analysis prior variance in FixedTruth settings

  void validate() const;
};

// Default monitored measures.
std::vector<EffectMeasure> default_monitored();

// Run the full study: for each (setting, replication) simulate one dataset,
// fit it once, then tune and sample every method on that same dataset.
// Per-replication random streams are derived from (seed, setting index,
// replication, method index), so the records do not depend on the worker
// count.  Output is ordered by setting, replication, method.
std::vector<CalibrationRecord> run_study(const StudyConfig& config);

// Empirical calibration curve: effective coverage of the quantile-based
// interval as a function of the nominal level, evaluated on the grid
// 0.01, 0.02, ..., 0.99 as the ECDF of the g statistics.
struct CalibrationCurve {
  std::string setting_id;
  std::string method;
  std::string measure;
  std::vector<double> nominal;
  std::vector<double> effective;
  int usable = 0;
};

// Curve from homogeneous records (one setting and one method); requires at
// least 50 usable records for the measure.
CalibrationCurve ecdf_curve(const std::vector<CalibrationRecord>& records,
                            const std::string& measure);

// All curves from a mixed record set, one per (setting, truth label, method,
// measure) group with at least min_usable usable records.  Groups from
// settings whose truth varies per replication get the truth label appended
// to the curve's setting id.
std::vector<CalibrationCurve> group_curves(const std::vector<CalibrationRecord>& records,
                                           int min_usable = 50);

// Kolmogorov-Smirnov uniformity check of the h statistics for one measure
// across usable records; requires at least 100 of them.
KsResult uniformity_check(const std::vector<CalibrationRecord>& records,
                          const std::string& measure);

// Fraction of records with fit_ok == false.
double failure_fraction(const std::vector<CalibrationRecord>& records);

// CSV renderings (canonical formatting, stable order).
std::string records_to_csv(const std::vector<CalibrationRecord>& records);
std::vector<CalibrationRecord> records_from_csv(const std::string& text, const std::string& origin);
std::string curves_to_csv(const std::vector<CalibrationCurve>& curves);

}  // namespace clbayes
