#include <cmath>
#include <string>
#include <vector>

#include "clbayes/calibration.hpp"
#include "clbayes/copula.hpp"
#include "clbayes/errors.hpp"
#include "clbayes/rng.hpp"
#include "doctest.h"

using namespace clbayes;

namespace {

SimSetting quick_setting(const std::string& id, double tau) {
  SimSetting s;
  s.id = id;
  s.family = CopulaKind::Clayton;
  s.rank_target = tau;
  s.phase = Phase::FixedTruth;
  s.truth = theta_prime();
  s.group_sizes = log_uniform_sizes(12, 2026);
  return s;
}

ChainConfig quick_chain() {
  ChainConfig chain;
  chain.total = 3000;
  chain.burn_in = 1000;
  chain.thinning = 2;
  return chain;
}

CalibrationRecord synthetic_record(const std::string& setting, const std::string& theta_label,
                                   const std::string& method, int replication, double h) {
  CalibrationRecord r;
  r.setting_id = setting;
  r.family = CopulaKind::Frank;
  r.rank_kind = RankKind::KendallTau;
  r.rank_target = 0.5;
  r.phase = Phase::FixedTruth;
  r.theta_label = theta_label;
  r.replication = replication;
  r.method = method;
  r.fit_ok = true;
  r.stats.push_back({"dor", h, g_statistic(h)});
  return r;
}

}  // namespace

TEST_CASE("method specs parse and label round trip") {
  MethodSpec none = MethodSpec::parse("none");
  CHECK(none.kind == AdjustKind::None);
  CHECK(none.label() == "none");

  MethodSpec zca = MethodSpec::parse("curvature_zca");
  CHECK(zca.kind == AdjustKind::CurvatureZca);
  MethodSpec zcacor = MethodSpec::parse("curvature_zcacor");
  CHECK(zcacor.kind == AdjustKind::CurvatureZcaCor);
  MethodSpec omni = MethodSpec::parse("magnitude_omnibus");
  CHECK(omni.kind == AdjustKind::MagnitudeOmnibus);

  MethodSpec targ = MethodSpec::parse("magnitude_targeted:dor");
  CHECK(targ.kind == AdjustKind::MagnitudeTargeted);
  REQUIRE(targ.target.has_value());
  CHECK(targ.target->name() == "dor");
  CHECK(targ.label() == "magnitude_targeted:dor");

  CHECK_THROWS_AS(MethodSpec::parse("magnitude_targeted"), InvalidInput);
  CHECK_THROWS_AS(MethodSpec::parse("none:dor"), InvalidInput);
  CHECK_THROWS_AS(MethodSpec::parse("banana"), InvalidInput);

  MethodSpec invalid;
  invalid.kind = AdjustKind::MagnitudeTargeted;
  CHECK_THROWS_AS(invalid.validate(), InvalidInput);
}

TEST_CASE("study configuration validation") {
  StudyConfig config;
  config.settings.push_back(quick_setting("s1", 0.5));
  config.methods.push_back(MethodSpec::parse("none"));
  config.monitored = default_monitored();
  config.replications = 3;
  config.chain = quick_chain();
  CHECK_NOTHROW(config.validate());

  StudyConfig unmonitored = config;
  unmonitored.monitored.clear();
  CHECK_THROWS_AS(unmonitored.validate(), InvalidInput);

  StudyConfig no_methods = config;
  no_methods.methods.clear();
  CHECK_THROWS_AS(no_methods.validate(), InvalidInput);
  StudyConfig no_settings = config;
  no_settings.settings.clear();
  CHECK_THROWS_AS(no_settings.validate(), InvalidInput);
  StudyConfig no_reps = config;
  no_reps.replications = 0;
  CHECK_THROWS_AS(no_reps.validate(), InvalidInput);
  StudyConfig bad_chain = config;
  bad_chain.chain.thinning = 0;
  CHECK_THROWS_AS(bad_chain.validate(), InvalidInput);

  std::vector<EffectMeasure> defaults = default_monitored();
  REQUIRE(defaults.size() == 3);
  CHECK(defaults[0].name() == "log_alpha1");
  CHECK(defaults[1].name() == "dor");
  CHECK(defaults[2].name() == "risk_diff");
}

TEST_CASE("records survive the csv round trip byte for byte") {
  std::vector<CalibrationRecord> records;
  records.push_back(synthetic_record("s1", "theta_prime", "none", 1, 0.25));
  records.push_back(synthetic_record("s1", "theta_prime", "none", 2, 0.5));
  records.back().stats.push_back({"riskdiff", 0.125, 0.75});
  CalibrationRecord failed;
  failed.setting_id = "s1";
  failed.family = CopulaKind::Frank;
  failed.rank_target = 0.5;
  failed.phase = Phase::FixedTruth;
  failed.theta_label = "theta_prime";
  failed.replication = 3;
  failed.method = "none";
  failed.fit_ok = false;
  failed.failure = "NonConvergence: gave up";
  records.push_back(failed);

  std::string csv = records_to_csv(records);
  std::vector<CalibrationRecord> back = records_from_csv(csv, "mem");
  REQUIRE(back.size() == records.size());
  CHECK(records_to_csv(back) == csv);
  CHECK(back[0].stats.size() == 1);
  CHECK(back[1].stats.size() == 2);
  CHECK(back[1].stats[1].measure == "riskdiff");
  CHECK(back[1].stats[1].h == 0.125);
  CHECK(back[2].fit_ok == false);
  CHECK(back[2].stats.empty());
  CHECK(back[0].family == CopulaKind::Frank);
  CHECK(back[0].phase == Phase::FixedTruth);

  CHECK_THROWS_AS(records_from_csv("not,a,header\n", "mem"), ParseError);
}

TEST_CASE("curves come from the ecdf of g") {
  // All h equal to one half: every interval covers, so the curve is flat one.
  std::vector<CalibrationRecord> flat;
  for (int i = 0; i < 120; ++i) {
    flat.push_back(synthetic_record("s", "theta_prime", "none", i + 1, 0.5));
  }
  CalibrationCurve curve = ecdf_curve(flat, "dor");
  REQUIRE(curve.nominal.size() == 99);
  CHECK(curve.nominal.front() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(curve.nominal.back() == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(curve.usable == 120);
  for (double e : curve.effective) CHECK(e == 1.0);

  // Uniform h gives uniform g, so the curve tracks the diagonal.
  std::vector<CalibrationRecord> uniform;
  RandomStream rng(13);
  for (int i = 0; i < 4000; ++i) {
    uniform.push_back(synthetic_record("s", "theta_prime", "none", i + 1, rng.uniform()));
  }
  CalibrationCurve diag = ecdf_curve(uniform, "dor");
  for (std::size_t k = 0; k < diag.nominal.size(); ++k) {
    CHECK(std::abs(diag.effective[k] - diag.nominal[k]) < 0.03);
  }

  std::vector<CalibrationRecord> few(flat.begin(), flat.begin() + 10);
  CHECK_THROWS_AS(ecdf_curve(few, "dor"), InsufficientRecords);
  CHECK_THROWS_AS(ecdf_curve(flat, "nonexistent"), InsufficientRecords);
}

TEST_CASE("grouping splits by setting, truth label, method and measure") {
  std::vector<CalibrationRecord> records;
  for (int i = 0; i < 60; ++i) {
    records.push_back(synthetic_record("s1", "theta_prime", "none", i + 1, 0.5));
    records.push_back(synthetic_record("s1", "theta_second", "none", i + 1, 0.25));
    records.push_back(synthetic_record("s2", "theta_prime", "curvature_zca", i + 1, 0.5));
  }
  std::vector<CalibrationCurve> curves = group_curves(records, 50);
  REQUIRE(curves.size() == 3);
  // Mixed truth labels within s1 split the setting id.
  bool saw_prime = false, saw_second = false, saw_s2 = false;
  for (const auto& c : curves) {
    if (c.setting_id == "s1_theta_prime") saw_prime = true;
    if (c.setting_id == "s1_theta_second") saw_second = true;
    if (c.setting_id == "s2") {
      saw_s2 = true;
      CHECK(c.method == "curvature_zca");
    }
    CHECK(c.measure == "dor");
    CHECK(c.usable == 60);
  }
  CHECK(saw_prime);
  CHECK(saw_second);
  CHECK(saw_s2);

  // Below the usability threshold nothing is produced.
  CHECK(group_curves(records, 61).empty());

  std::string csv = curves_to_csv(curves);
  CHECK(csv.find("setting_id,method,measure,nominal,effective,n") != std::string::npos);
  CHECK(csv.find("s1_theta_prime") != std::string::npos);
}

TEST_CASE("uniformity check flags non-uniform h") {
  std::vector<CalibrationRecord> uniform, skewed, centred;
  RandomStream rng(14);
  for (int i = 0; i < 2000; ++i) {
    uniform.push_back(synthetic_record("s", "t", "none", i + 1, rng.uniform()));
    // Beta(2, 2)-ish h from averaging two uniforms: strongly non-uniform.
    skewed.push_back(synthetic_record("s", "t", "none", i + 1, 0.5 * (rng.uniform() + rng.uniform())));
    centred.push_back(synthetic_record("s", "t", "none", i + 1, 0.5));
  }
  CHECK(uniformity_check(uniform, "dor").p_value > 0.001);
  CHECK(uniformity_check(skewed, "dor").p_value < 0.001);
  CHECK(uniformity_check(centred, "dor").statistic == doctest::Approx(0.5).epsilon(1e-9));

  std::vector<CalibrationRecord> few(uniform.begin(), uniform.begin() + 50);
  CHECK_THROWS_AS(uniformity_check(few, "dor"), InsufficientRecords);
}

TEST_CASE("failure fraction counts unusable records") {
  std::vector<CalibrationRecord> records;
  for (int i = 0; i < 10; ++i) {
    records.push_back(synthetic_record("s", "t", "none", i + 1, 0.5));
  }
  records[3].fit_ok = false;
  records[3].stats.clear();
  records[7].fit_ok = false;
  records[7].stats.clear();
  CHECK(failure_fraction(records) == doctest::Approx(0.2).epsilon(1e-15));
  std::vector<CalibrationRecord> empty;
  CHECK_THROWS_AS(failure_fraction(empty), InvalidInput);
}

TEST_CASE("studies run deterministically regardless of worker count") {
  StudyConfig config;
  config.settings.push_back(quick_setting("det", 0.5));
  config.methods.push_back(MethodSpec::parse("none"));
  config.methods.push_back(MethodSpec::parse("magnitude_omnibus"));
  config.monitored = default_monitored();
  config.replications = 4;
  config.seed = 99;
  config.chain = quick_chain();

  config.workers = 1;
  std::vector<CalibrationRecord> serial = run_study(config);
  config.workers = 3;
  std::vector<CalibrationRecord> parallel = run_study(config);

  REQUIRE(serial.size() == 8);
  CHECK(records_to_csv(serial) == records_to_csv(parallel));

  // Ordered by setting, replication, method.
  CHECK(serial[0].replication == 1);
  CHECK(serial[0].method == "none");
  CHECK(serial[1].replication == 1);
  CHECK(serial[1].method == "magnitude_omnibus");
  CHECK(serial[2].replication == 2);

  for (const auto& r : serial) {
    if (!r.fit_ok) continue;
    REQUIRE(r.stats.size() == 3);
    CHECK(r.stats[0].measure == "log_alpha1");
    CHECK(r.stats[1].measure == "dor");
    CHECK(r.stats[2].measure == "risk_diff");
    for (const auto& st : r.stats) {
      CHECK(st.h >= 0.0);
      CHECK(st.h <= 1.0);
      CHECK(st.g == doctest::Approx(g_statistic(st.h)).epsilon(1e-15));
    }
    CHECK(r.theta_label == "theta_prime");
  }
}

TEST_CASE("independent data with a sharp fit calibrates the plain posterior") {
  // tau = 0 keeps the information identity roughly intact, so h should look
  // uniform and the effective coverage should track the nominal level.
  StudyConfig config;
  SimSetting s;
  s.id = "indep";
  s.rank_target = 0.0;
  s.phase = Phase::FixedTruth;
  s.truth = theta_prime();
  s.group_sizes = log_uniform_sizes(30, 7);
  config.settings.push_back(s);
  config.methods.push_back(MethodSpec::parse("none"));
  config.monitored = default_monitored();
  config.replications = 200;
  config.seed = 555;
  config.workers = 1;
  config.chain.total = 12000;
  config.chain.burn_in = 2000;
  config.chain.thinning = 10;

  std::vector<CalibrationRecord> records = run_study(config);
  REQUIRE(records.size() == 200);
  CHECK(failure_fraction(records) < 0.05);
  std::vector<CalibrationCurve> curves = group_curves(records, 50);
  bool found = false;
  for (const auto& c : curves) {
    if (c.measure != "dor") continue;
    found = true;
    for (std::size_t k = 0; k < c.nominal.size(); ++k) {
      if (c.nominal[k] == 0.5 || c.nominal[k] == 0.9) {
        CHECK(std::abs(c.effective[k] - c.nominal[k]) < 0.10);
      }
    }
  }
  CHECK(found);
}
