#include "clbayes/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "clbayes/csv.hpp"
#include "clbayes/errors.hpp"
#include "clbayes/freq.hpp"
#include "clbayes/stats.hpp"

namespace clbayes {

std::string MethodSpec::label() const {
  if (kind == AdjustKind::MagnitudeTargeted) {
    return adjust_name(kind) + ":" + (target ? target->name() : std::string("?"));
  }
  return adjust_name(kind);
}

MethodSpec MethodSpec::parse(const std::string& text) {
  MethodSpec spec;
  std::string name = text;
  std::string target_name;
  std::size_t colon = text.find(':');
  if (colon != std::string::npos) {
    name = text.substr(0, colon);
    target_name = text.substr(colon + 1);
  }
  if (name == "none") {
    spec.kind = AdjustKind::None;
  } else if (name == "curvature_zca") {
    spec.kind = AdjustKind::CurvatureZca;
  } else if (name == "curvature_zcacor") {
    spec.kind = AdjustKind::CurvatureZcaCor;
  } else if (name == "magnitude_omnibus") {
    spec.kind = AdjustKind::MagnitudeOmnibus;
  } else if (name == "magnitude_targeted") {
    spec.kind = AdjustKind::MagnitudeTargeted;
  } else {
    throw InvalidInput("unknown method '" + text + "'");
  }
  if (spec.kind == AdjustKind::MagnitudeTargeted) {
    if (target_name.empty()) {
      throw InvalidInput("method '" + text + "' needs a target, e.g. magnitude_targeted:dor");
    }
    spec.target = EffectMeasure::parse(target_name);
  } else if (!target_name.empty()) {
    throw InvalidInput("method '" + name + "' does not take a target");
  }
  spec.validate();
  return spec;
}

void MethodSpec::validate() const {
  if (kind == AdjustKind::MagnitudeTargeted && !target.has_value()) {
    throw InvalidInput("MethodSpec: targeted magnitude needs a target measure");
  }
  if (kind != AdjustKind::MagnitudeTargeted && target.has_value()) {
    throw InvalidInput("MethodSpec: only targeted magnitude takes a target measure");
  }
}

Adjustment MethodSpec::tune(const FitResult& fit) const {
  validate();
  switch (kind) {
    case AdjustKind::None:
      return Adjustment::none(fit);
    case AdjustKind::CurvatureZca:
    case AdjustKind::CurvatureZcaCor:
      return Adjustment::curvature(fit, kind);
    case AdjustKind::MagnitudeOmnibus:
      return Adjustment::magnitude_omnibus(fit);
    case AdjustKind::MagnitudeTargeted:
      return Adjustment::magnitude_targeted(fit, *target);
  }
  throw InvalidInput("MethodSpec: unknown kind");
}

std::vector<EffectMeasure> default_monitored() {
  return {EffectMeasure::component(0, 2), EffectMeasure::odds_ratio(),
          EffectMeasure::risk_difference()};
}

void StudyConfig::validate() const {
  if (settings.empty()) throw InvalidInput("StudyConfig: no settings");
  std::vector<std::string> ids;
  for (const auto& s : settings) {
    if (s.id.empty()) throw InvalidInput("StudyConfig: settings need non-empty ids");
    s.validate();
    ids.push_back(s.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw InvalidInput("StudyConfig: duplicate setting ids");
  }
  if (methods.empty()) throw InvalidInput("StudyConfig: no methods");
  std::vector<std::string> labels;
  for (const auto& m : methods) {
    m.validate();
    labels.push_back(m.label());
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw InvalidInput("StudyConfig: duplicate methods");
  }
  if (monitored.empty()) throw InvalidInput("StudyConfig: no monitored measures");
  if (replications < 1) throw InvalidInput("StudyConfig: replications must be positive");
  if (workers < 0) throw InvalidInput("StudyConfig: workers must be non-negative");
  if (!(diffuse_variance > 0.0)) throw InvalidInput("StudyConfig: diffuse variance must be positive");
  chain.validate(4);
}

namespace {

std::vector<CalibrationRecord> run_item(const StudyConfig& config, std::size_t setting_index,
                                        int replication) {
  const SimSetting& setting = config.settings[setting_index];
  RandomStream rng = RandomStream::substream(config.seed, setting_index,
                                             static_cast<std::uint64_t>(replication), 0);
  GaussianPrior truth_prior = GaussianPrior::standard(4);
  SimulatedMeta sim = simulate_dataset(setting, truth_prior, rng);
  GaussianPrior analysis_prior = setting.phase == Phase::PriorTruth
                                     ? GaussianPrior::standard(4)
                                     : GaussianPrior::diffuse(4, config.diffuse_variance);

  std::vector<double> references;
  references.reserve(config.monitored.size());
  for (const auto& m : config.monitored) references.push_back(m.value(sim.truth));

  CalibrationRecord base;
  base.setting_id = setting.id;
  base.family = setting.family;
  base.rank_kind = setting.rank_kind;
  base.rank_target = setting.rank_target;
  base.phase = setting.phase;
  base.theta_label = sim.truth_label;
  base.replication = replication + 1;

  std::vector<CalibrationRecord> records;
  records.reserve(config.methods.size());

  std::optional<FitResult> fit;
  std::string fit_failure;
  try {
    fit = maximize(sim.data);
  } catch (const NumericalError& e) {
    fit_failure = e.what();
  }

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    CalibrationRecord rec = base;
    rec.method = config.methods[mi].label();
    if (!fit.has_value()) {
      rec.failure = fit_failure;
      records.push_back(std::move(rec));
      continue;
    }
    try {
      Adjustment adjustment = config.methods[mi].tune(*fit);
      auto target = log_posterior(sim.data, adjustment, analysis_prior);
      RandomStream chain_rng = RandomStream::substream(
          config.seed, setting_index, static_cast<std::uint64_t>(replication), 1 + mi);
      PosteriorSample sample = run_chain(target, fit->theta_hat.values(), config.chain, chain_rng);
      for (std::size_t j = 0; j < config.monitored.size(); ++j) {
        double h = h_statistic(sample, config.monitored[j], references[j]);
        rec.stats.push_back({config.monitored[j].name(), h, g_statistic(h)});
      }
      rec.fit_ok = true;
    } catch (const NumericalError& e) {
      rec.stats.clear();
      rec.fit_ok = false;
      rec.failure = e.what();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<CalibrationRecord> run_study(const StudyConfig& config) {
  config.validate();
  const std::size_t n_settings = config.settings.size();
  const std::size_t n_items = n_settings * static_cast<std::size_t>(config.replications);
  std::vector<std::vector<CalibrationRecord>> per_item(n_items);

  int workers = config.workers > 0 ? config.workers
                                   : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp<int>(workers, 1, static_cast<int>(n_items));

  auto work = [&](std::size_t item) {
    std::size_t setting_index = item / static_cast<std::size_t>(config.replications);
    int replication = static_cast<int>(item % static_cast<std::size_t>(config.replications));
    per_item[item] = run_item(config, setting_index, replication);
  };

  if (workers == 1) {
    for (std::size_t item = 0; item < n_items; ++item) work(item);
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto loop = [&] {
      for (;;) {
        std::size_t item = next.fetch_add(1);
        if (item >= n_items || stop.load()) return;
        try {
          work(item);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          stop.store(true);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<CalibrationRecord> records;
  records.reserve(n_items * config.methods.size());
  for (auto& item : per_item) {
    for (auto& rec : item) records.push_back(std::move(rec));
  }
  // Items are laid out setting-major, so records arrive ordered by setting,
  // replication, method already.
  return records;
}

namespace {

const MeasureStat* find_stat(const CalibrationRecord& rec, const std::string& measure) {
  for (const auto& s : rec.stats) {
    if (s.measure == measure) return &s;
  }
  return nullptr;
}

CalibrationCurve curve_from(const std::vector<const CalibrationRecord*>& group,
                            const std::string& measure, const std::string& setting_id,
                            const std::string& method, int min_usable) {
  std::vector<double> gs;
  for (const auto* rec : group) {
    if (!rec->fit_ok) continue;
    if (const MeasureStat* s = find_stat(*rec, measure)) gs.push_back(s->g);
  }
  if (static_cast<int>(gs.size()) < min_usable) {
    throw InsufficientRecords("calibration curve for " + setting_id + "/" + method + "/" +
                              measure + " needs at least " + std::to_string(min_usable) +
                              " usable records, found " + std::to_string(gs.size()));
  }
  CalibrationCurve curve;
  curve.setting_id = setting_id;
  curve.method = method;
  curve.measure = measure;
  curve.usable = static_cast<int>(gs.size());
  curve.nominal.reserve(99);
  curve.effective.reserve(99);
  for (int i = 1; i <= 99; ++i) {
    double p = static_cast<double>(i) / 100.0;
    curve.nominal.push_back(p);
    curve.effective.push_back(ecdf(gs, p));
  }
  return curve;
}

}  // namespace

CalibrationCurve ecdf_curve(const std::vector<CalibrationRecord>& records,
                            const std::string& measure) {
  if (records.empty()) throw InvalidInput("ecdf_curve: no records");
  std::vector<const CalibrationRecord*> group;
  group.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.setting_id != records.front().setting_id || rec.method != records.front().method) {
      throw InvalidInput("ecdf_curve: records must come from a single setting and method");
    }
    group.push_back(&rec);
  }
  return curve_from(group, measure, records.front().setting_id, records.front().method, 50);
}

std::vector<CalibrationCurve> group_curves(const std::vector<CalibrationRecord>& records,
                                           int min_usable) {
  // Settings whose truth label varies per replication are split into one
  // curve per label.
  std::map<std::string, bool> label_varies;
  std::map<std::string, std::string> first_label;
  for (const auto& rec : records) {
    auto [it, inserted] = first_label.try_emplace(rec.setting_id, rec.theta_label);
    if (!inserted && it->second != rec.theta_label) label_varies[rec.setting_id] = true;
  }

  std::map<std::pair<std::string, std::string>, std::vector<const CalibrationRecord*>> groups;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> measures;
  for (const auto& rec : records) {
    std::string id = rec.setting_id;
    if (label_varies.count(rec.setting_id)) id += "_" + rec.theta_label;
    auto key = std::make_pair(id, rec.method);
    groups[key].push_back(&rec);
    auto& names = measures[key];
    for (const auto& s : rec.stats) {
      if (std::find(names.begin(), names.end(), s.measure) == names.end()) {
        names.push_back(s.measure);
      }
    }
  }

  std::vector<CalibrationCurve> curves;
  for (const auto& [key, group] : groups) {
    for (const auto& measure : measures[key]) {
      try {
        curves.push_back(curve_from(group, measure, key.first, key.second, min_usable));
      } catch (const InsufficientRecords&) {
        // Skip starved groups; the caller reports coverage via usable counts.
      }
    }
  }
  return curves;
}

KsResult uniformity_check(const std::vector<CalibrationRecord>& records,
                          const std::string& measure) {
  std::vector<double> hs;
  for (const auto& rec : records) {
    if (!rec.fit_ok) continue;
    if (const MeasureStat* s = find_stat(rec, measure)) hs.push_back(s->h);
  }
  if (hs.size() < 100) {
    throw InsufficientRecords("uniformity check needs at least 100 usable records, found " +
                              std::to_string(hs.size()));
  }
  return ks_test_uniform(std::move(hs));
}

double failure_fraction(const std::vector<CalibrationRecord>& records) {
  if (records.empty()) throw InvalidInput("failure_fraction: no records");
  std::size_t failed = 0;
  for (const auto& rec : records) {
    if (!rec.fit_ok) ++failed;
  }
  return static_cast<double>(failed) / static_cast<double>(records.size());
}

std::string records_to_csv(const std::vector<CalibrationRecord>& records) {
  std::string out = "setting_id,family,tau,phase,theta_label,rep,method,measure,h,g,fit_ok\n";
  for (const auto& rec : records) {
    std::string prefix = rec.setting_id + "," + copula_name(rec.family) + "," +
                         format_double(rec.rank_target) + "," +
                         std::to_string(phase_number(rec.phase)) + "," + rec.theta_label + "," +
                         std::to_string(rec.replication) + "," + rec.method + ",";
    if (rec.stats.empty()) {
      out += prefix + ",,," + (rec.fit_ok ? "1" : "0") + "\n";
    } else {
      for (const auto& s : rec.stats) {
        out += prefix + s.measure + "," + format_double(s.h) + "," + format_double(s.g) + "," +
               (rec.fit_ok ? "1" : "0") + "\n";
      }
    }
  }
  return out;
}

std::vector<CalibrationRecord> records_from_csv(const std::string& text,
                                                const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::vector<CalibrationRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (!saw_header) {
      if (fields != split_fields("setting_id,family,tau,phase,theta_label,rep,method,measure,h,g,fit_ok")) {
        throw ParseError(origin, line_no, "unexpected records header");
      }
      saw_header = true;
      continue;
    }
    if (fields.size() != 11) throw ParseError(origin, line_no, "expected 11 fields");
    CalibrationRecord parsed;
    parsed.setting_id = fields[0];
    parsed.family = parse_copula(fields[1]);
    parsed.rank_target = parse_double(fields[2], "tau");
    parsed.phase = parse_phase(static_cast<int>(parse_int(fields[3], "phase")));
    parsed.theta_label = fields[4];
    parsed.replication = static_cast<int>(parse_int(fields[5], "rep"));
    parsed.method = fields[6];
    parsed.fit_ok = fields[10] == "1";
    bool same_record = !records.empty() && records.back().setting_id == parsed.setting_id &&
                       records.back().replication == parsed.replication &&
                       records.back().method == parsed.method;
    if (!same_record) records.push_back(parsed);
    if (!fields[7].empty()) {
      records.back().stats.push_back({fields[7], parse_double(fields[8], "h"),
                                      parse_double(fields[9], "g")});
    }
  }
  if (!saw_header) throw ParseError(origin, 1, "records file is empty");
  return records;
}

std::string curves_to_csv(const std::vector<CalibrationCurve>& curves) {
  std::string out = "setting_id,method,measure,nominal,effective,n\n";
  for (const auto& curve : curves) {
    for (std::size_t i = 0; i < curve.nominal.size(); ++i) {
      out += curve.setting_id + "," + curve.method + "," + curve.measure + "," +
             format_double(curve.nominal[i]) + "," + format_double(curve.effective[i]) + "," +
             std::to_string(curve.usable) + "\n";
    }
  }
  return out;
}

}  // namespace clbayes
