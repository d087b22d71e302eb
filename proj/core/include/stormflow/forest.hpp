#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stormflow/descriptors.hpp"

namespace stormflow {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 5;
  int features_per_split = 3;
  std::uint64_t seed = 42;
  /// Features the trees may split on; the others are ignored.
  std::array<bool, kFeatureCount> feature_mask{true, true, true, true, true, true, true, true};
  /// Training threads; 0 picks the hardware concurrency.
  unsigned workers = 1;

  [[nodiscard]] std::size_t active_features() const;
  void validate() const;
};

/// Flat binary tree. Node 0 is the root; leaves have feature = -1.
struct Tree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t negatives = 0;
    std::uint32_t positives = 0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
  };
  std::vector<Node> nodes;

  /// Majority class of the leaf reached by x; ties vote positive.
  [[nodiscard]] bool vote(const FeatureVector& x) const;
  [[nodiscard]] int depth() const;
};

struct Prediction {
  bool label = false;
  double score = 0.0;  // fraction of trees voting positive
};

class Forest {
public:
  [[nodiscard]] const ForestConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::vector<Tree>& trees() const noexcept { return trees_; }
  [[nodiscard]] int layout_version() const noexcept { return layout_version_; }
  /// Out-of-bag accuracy from training, or a negative value when no sample
  /// was ever out of bag.
  [[nodiscard]] double oob_accuracy() const noexcept { return oob_accuracy_; }

  /// label = score >= 0.5.
  [[nodiscard]] Prediction predict(const FeatureVector& x) const;
  [[nodiscard]] Prediction predict(const VortexDescriptor& d) const { return predict(d.w); }

  /// Number of internal nodes splitting on each feature.
  [[nodiscard]] std::array<std::size_t, kFeatureCount> split_counts() const;

  [[nodiscard]] std::string to_json() const;
  /// Throws DataError on malformed input or a feature layout other than the
  /// current one.
  static Forest from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Forest load(const std::filesystem::path& path);

private:
  friend Forest train_forest(const std::vector<FeatureVector>&, const std::vector<bool>&, const ForestConfig&);

  ForestConfig config_;
  std::vector<Tree> trees_;
  int layout_version_ = kFeatureLayoutVersion;
  double oob_accuracy_ = -1.0;
};

/// Bootstrap-aggregated CART trees with Gini splits. A split sends x <= a
/// left, where a is the largest value on the left side. Tree i draws from
/// splitmix64(seed + i), so the result does not depend on the worker count.
Forest train_forest(const std::vector<FeatureVector>& samples, const std::vector<bool>& labels,
                    const ForestConfig& cfg);
Forest train_forest(const std::vector<VortexDescriptor>& samples, const std::vector<bool>& labels,
                    const ForestConfig& cfg);

}  // namespace stormflow
