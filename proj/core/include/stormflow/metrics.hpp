#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace stormflow {

struct Metrics {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  /// Absent when the denominator is zero.
  std::optional<double> overall;
  std::optional<double> sensitivity;
  std::optional<double> specificity;

  /// Recomputes the ratios from the counts.
  void finalize();
  [[nodiscard]] std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const Metrics&) const = default;
};

Metrics metrics_from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

/// Throws ConfigError when the lengths differ or are zero.
Metrics confusion_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth);

}  // namespace stormflow
