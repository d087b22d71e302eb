#include "stormflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "stormflow/random.hpp"

namespace stormflow {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::optional<double> mean_of(const std::vector<Metrics>& folds, std::optional<double> Metrics::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : folds) {
    if (const auto& v = m.*field) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

void Metrics::finalize() {
  overall = ratio(tp + tn, total());
  sensitivity = ratio(tp, tp + fn);
  specificity = ratio(tn, tn + fp);
}

Metrics metrics_from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;
  m.finalize();
  return m;
}

Metrics confusion_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) throw ConfigError("prediction and truth lengths differ");
  if (predicted.empty()) throw ConfigError("no predictions to score");
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      (predicted[i] ? tp : fn)++;
    } else {
      (predicted[i] ? fp : tn)++;
    }
  }
  return metrics_from_counts(tp, tn, fp, fn);
}

std::vector<int> stratified_folds(const std::vector<bool>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross validation needs k >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  const auto kk = static_cast<std::size_t>(k);
  if (pos.size() < kk || neg.size() < kk) {
    throw DataError("cannot stratify " + std::to_string(pos.size()) + " positives and " +
                    std::to_string(neg.size()) + " negatives into " + std::to_string(k) + " folds");
  }
  std::mt19937_64 rng(splitmix64(seed ^ 0x5f0d5eedULL));
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_index(rng, i))]);
    }
  };
  shuffle(pos);
  shuffle(neg);
  std::vector<int> fold(labels.size(), 0);
  // Negatives continue the rotation where positives stopped so fold sizes
  // differ by at most one.
  std::size_t slot = 0;
  for (auto i : pos) fold[i] = static_cast<int>(slot++ % kk);
  for (auto i : neg) fold[i] = static_cast<int>(slot++ % kk);
  return fold;
}

CrossValidation cross_validate(const std::vector<FeatureVector>& samples, const std::vector<bool>& labels, int k,
                               const ForestConfig& cfg) {
  cfg.validate();
  if (samples.size() != labels.size()) throw DataError("sample and label counts differ");
  const auto fold = stratified_folds(labels, k, cfg.seed);
  CrossValidation cv;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (int f = 0; f < k; ++f) {
    std::vector<FeatureVector> train_x;
    std::vector<bool> train_y;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (fold[i] == f) {
        test.push_back(i);
      } else {
        train_x.push_back(samples[i]);
        train_y.push_back(labels[i]);
      }
    }
    ForestConfig fc = cfg;
    fc.seed = splitmix64(cfg.seed + static_cast<std::uint64_t>(f) + 1);
    const Forest forest = train_forest(train_x, train_y, fc);
    std::vector<bool> pred, truth;
    for (auto i : test) {
      pred.push_back(forest.predict(samples[i]).label);
      truth.push_back(labels[i]);
    }
    const Metrics m = confusion_metrics(pred, truth);
    tp += m.tp;
    tn += m.tn;
    fp += m.fp;
    fn += m.fn;
    cv.folds.push_back(m);
  }
  cv.pooled = metrics_from_counts(tp, tn, fp, fn);
  cv.mean_overall = mean_of(cv.folds, &Metrics::overall);
  cv.mean_sensitivity = mean_of(cv.folds, &Metrics::sensitivity);
  cv.mean_specificity = mean_of(cv.folds, &Metrics::specificity);
  return cv;
}

std::size_t LeadTimeCurve::with_storm() const {
  std::size_t n = ongoing.count + beyond.count;
  for (const auto& b : buckets) n += b.count;
  return n;
}

std::vector<double> default_lead_time_edges() {
  std::vector<double> e;
  for (int i = 0; i <= 12; ++i) e.push_back(0.5 * i);
  return e;
}

LeadTimeCurve lead_time_curve(const std::vector<std::pair<VortexDescriptor, bool>>& vortices, const StormDB& db,
                              const std::vector<double>& edges) {
  if (edges.size() < 2) throw ConfigError("lead-time curve needs at least two edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw ConfigError("lead-time edges must be finite");
    if (i > 0 && !(edges[i] > edges[i - 1])) throw ConfigError("lead-time edges must increase strictly");
  }
  if (edges.front() != 0.0) throw ConfigError("lead-time edges must start at zero");

  LeadTimeCurve c;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) c.buckets.push_back({edges[i], edges[i + 1], 0, 0});
  c.ongoing = {-2.0, 0.0, 0, 0};
  c.beyond = {edges.back(), std::numeric_limits<double>::infinity(), 0, 0};

  for (const auto& [d, predicted] : vortices) {
    const auto when = earliest_storm_time(db, d.centroid_geo.lat, d.centroid_geo.lon, d.timestamp);
    if (!when) {
      ++c.without_storm;
      continue;
    }
    const double dt = hours_between(d.timestamp, *when);
    LeadTimeBucket* b = nullptr;
    if (dt <= 0.0) {
      b = &c.ongoing;
    } else if (dt >= edges.back()) {
      b = &c.beyond;
    } else {
      const auto it = std::upper_bound(edges.begin(), edges.end(), dt);
      b = &c.buckets[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
    ++b->count;
    if (predicted) ++b->predicted_storm;
  }
  return c;
}

AblationResult ablation_run(const std::vector<FeatureVector>& samples, const std::vector<bool>& labels, int k,
                            const ForestConfig& cfg) {
  auto subset = [&](std::array<bool, kFeatureCount> mask) {
    ForestConfig c = cfg;
    c.feature_mask = mask;
    c.features_per_split = std::min(c.features_per_split, static_cast<int>(c.active_features()));
    return cross_validate(samples, labels, k, c);
  };
  AblationResult r;
  r.all = subset({true, true, true, true, true, true, true, true});
  r.visual = subset({true, true, true, true, true, true, true, false});
  r.prior = subset({false, false, false, false, false, false, false, true});
  return r;
}

void write_metrics_csv(const std::vector<std::pair<std::string, CrossValidation>>& sets,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "set,fold,tp,tn,fp,fn,overall,sensitivity,specificity\n";
  for (const auto& [name, cv] : sets) {
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
      const auto& m = cv.folds[f];
      out << name << ',' << f << ',' << m.tp << ',' << m.tn << ',' << m.fp << ',' << m.fn << ','
          << cell(m.overall) << ',' << cell(m.sensitivity) << ',' << cell(m.specificity) << '\n';
    }
    const auto& p = cv.pooled;
    out << name << ",all," << p.tp << ',' << p.tn << ',' << p.fp << ',' << p.fn << ',' << cell(p.overall) << ','
        << cell(p.sensitivity) << ',' << cell(p.specificity) << '\n';
    out << name << ",mean,,,,," << cell(cv.mean_overall) << ',' << cell(cv.mean_sensitivity) << ','
        << cell(cv.mean_specificity) << '\n';
  }
}

void write_metrics_csv(const Metrics& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "set,fold,tp,tn,fp,fn,overall,sensitivity,specificity\n";
  out << "test,all," << m.tp << ',' << m.tn << ',' << m.fp << ',' << m.fn << ',' << cell(m.overall) << ','
      << cell(m.sensitivity) << ',' << cell(m.specificity) << '\n';
}

void write_lead_time_csv(const LeadTimeCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "bucket,lo_hours,hi_hours,count,predicted_storm,fraction\n";
  auto row = [&](const std::string& name, const LeadTimeBucket& b) {
    char lo[32], hi[32];
    std::snprintf(lo, sizeof lo, "%g", b.lo_hours);
    std::snprintf(hi, sizeof hi, "%g", b.hi_hours);
    out << name << ',' << lo << ',' << (std::isinf(b.hi_hours) ? std::string() : std::string(hi)) << ','
        << b.count << ',' << b.predicted_storm << ',' << cell(b.fraction()) << '\n';
  };
  row("ongoing", curve.ongoing);
  for (std::size_t i = 0; i < curve.buckets.size(); ++i) row(std::to_string(i), curve.buckets[i]);
  row("beyond", curve.beyond);
}

}  // namespace stormflow
