#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "stormflow/climatology.hpp"
#include "stormflow/descriptors.hpp"
#include "stormflow/forest.hpp"
#include "stormflow/metrics.hpp"

namespace stormflow {

struct CrossValidation {
  std::vector<Metrics> folds;
  /// Counts summed over all folds.
  Metrics pooled;
  /// Means over the folds where the ratio is defined.
  std::optional<double> mean_overall;
  std::optional<double> mean_sensitivity;
  std::optional<double> mean_specificity;
};

/// Stratified assignment of each sample to one of k folds, shuffled by seed.
/// Throws DataError when a class has fewer than k members.
std::vector<int> stratified_folds(const std::vector<bool>& labels, int k, std::uint64_t seed);

/// Trains one forest per fold on the other k-1 folds; fold assignment and
/// training use cfg.seed.
CrossValidation cross_validate(const std::vector<FeatureVector>& samples, const std::vector<bool>& labels, int k,
                               const ForestConfig& cfg);

struct LeadTimeBucket {
  double lo_hours = 0.0;
  double hi_hours = 0.0;  // half-open [lo, hi)
  std::size_t count = 0;
  std::size_t predicted_storm = 0;
  [[nodiscard]] std::optional<double> fraction() const {
    if (count == 0) return std::nullopt;
    return static_cast<double>(predicted_storm) / static_cast<double>(count);
  }
};

struct LeadTimeCurve {
  std::vector<LeadTimeBucket> buckets;
  /// Vortices whose nearby storm began at or before the observation.
  LeadTimeBucket ongoing;
  /// Positive lead times beyond the last edge.
  LeadTimeBucket beyond;
  /// Vortices with no storm in the search window.
  std::size_t without_storm = 0;

  [[nodiscard]] std::size_t with_storm() const;
};

/// 0 to 6 hours in half-hour steps.
std::vector<double> default_lead_time_edges();

/// Places each vortex by dt = earliest_storm_time - t (hours). Edges must be
/// strictly increasing from 0; dt <= 0 goes to `ongoing`.
LeadTimeCurve lead_time_curve(const std::vector<std::pair<VortexDescriptor, bool>>& vortices, const StormDB& db,
                              const std::vector<double>& edges = default_lead_time_edges());

struct AblationResult {
  CrossValidation all;
  CrossValidation visual;  // w1..w7
  CrossValidation prior;   // w8
};

/// Three cross-validations with identical folds and seeds on the full,
/// visual-only and prior-only feature subsets. features_per_split is capped
/// at the subset size.
AblationResult ablation_run(const std::vector<FeatureVector>& samples, const std::vector<bool>& labels, int k,
                            const ForestConfig& cfg);

/// CSV with header set,fold,tp,tn,fp,fn,overall,sensitivity,specificity.
/// Absent ratios are written as empty cells; the fold column is "all" for
/// pooled counts and "mean" for fold means.
void write_metrics_csv(const std::vector<std::pair<std::string, CrossValidation>>& sets,
                       const std::filesystem::path& path);
/// Single confusion matrix as one "test" row.
void write_metrics_csv(const Metrics& m, const std::filesystem::path& path);
/// CSV with header bucket,lo_hours,hi_hours,count,predicted_storm,fraction.
void write_lead_time_csv(const LeadTimeCurve& curve, const std::filesystem::path& path);

}  // namespace stormflow
