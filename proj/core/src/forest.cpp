#include "stormflow/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "stormflow/random.hpp"

namespace stormflow {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "stormflow-forest";
constexpr int kFormatVersion = 1;

double gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
public:
  TreeBuilder(const std::vector<FeatureVector>& x, const std::vector<bool>& y, const ForestConfig& cfg,
              std::mt19937_64& rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (cfg.feature_mask[f]) active_.push_back(static_cast<int>(f));
    }
  }

  Tree build(std::vector<std::uint32_t> sample) {
    tree_.nodes.clear();
    grow(sample, 0);
    return std::move(tree_);
  }

private:
  std::int32_t grow(std::vector<std::uint32_t>& idx, int depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::uint32_t pos = 0;
    for (auto i : idx) pos += y_[i] ? 1U : 0U;
    tree_.nodes[id].positives = pos;
    tree_.nodes[id].negatives = static_cast<std::uint32_t>(idx.size()) - pos;

    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    if (depth >= cfg_.max_depth || pos == 0 || pos == idx.size() || idx.size() < 2 * min_leaf) return id;

    const Split best = find_split(idx, pos);
    if (best.feature < 0) return id;

    std::vector<std::uint32_t> left, right;
    left.reserve(best.left_count);
    right.reserve(idx.size() - best.left_count);
    for (auto i : idx) {
      (x_[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  Split find_split(const std::vector<std::uint32_t>& idx, std::uint32_t pos) {
    // Features are drawn without replacement before any data is inspected, so
    // the random stream depends only on the tree shape.
    std::vector<int> features = active_;
    const std::size_t take = std::min(features.size(), static_cast<std::size_t>(cfg_.features_per_split));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(uniform_index(rng_, features.size() - k));
      std::swap(features[k], features[pick]);
    }
    features.resize(take);

    const double n = static_cast<double>(idx.size());
    const double parent = gini(pos, n);
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    Split best;
    std::vector<std::pair<double, bool>> column(idx.size());
    for (int f : features) {
      const auto fi = static_cast<std::size_t>(f);
      for (std::size_t k = 0; k < idx.size(); ++k) column[k] = {x_[idx[k]][fi], y_[idx[k]]};
      std::sort(column.begin(), column.end());
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        left_pos += column[k].second ? 1.0 : 0.0;
        const std::size_t nl = k + 1;
        if (column[k].first == column[k + 1].first) continue;
        if (nl < min_leaf || column.size() - nl < min_leaf) continue;
        const double l = static_cast<double>(nl);
        const double r = n - l;
        const double child = (l * gini(left_pos, l) + r * gini(pos - left_pos, r)) / n;
        const double gain = parent - child;
        if (gain > best.gain + 1e-12) {
          // The largest left value keeps the split order-based, so any
          // increasing transform of a feature partitions unseen points alike.
          best = {f, column[k].first, gain, nl};
        }
      }
    }
    return best;
  }

  const std::vector<FeatureVector>& x_;
  const std::vector<bool>& y_;
  const ForestConfig& cfg_;
  std::mt19937_64& rng_;
  std::vector<int> active_;
  Tree tree_;
};

json config_to_json(const ForestConfig& c) {
  json mask = json::array();
  for (bool b : c.feature_mask) mask.push_back(b);
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"min_leaf", c.min_leaf},
          {"features_per_split", c.features_per_split},
          {"seed", c.seed},
          {"feature_mask", mask}};
}

ForestConfig config_from_json(const json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.min_leaf = j.at("min_leaf").get<int>();
  c.features_per_split = j.at("features_per_split").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& mask = j.at("feature_mask");
  if (mask.size() != kFeatureCount) throw DataError("model feature_mask has the wrong length");
  for (std::size_t f = 0; f < kFeatureCount; ++f) c.feature_mask[f] = mask.at(f).get<bool>();
  return c;
}

}  // namespace

std::size_t ForestConfig::active_features() const {
  return static_cast<std::size_t>(std::count(feature_mask.begin(), feature_mask.end(), true));
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (features_per_split < 1 || features_per_split > static_cast<int>(kFeatureCount)) {
    throw ConfigError("features_per_split must be in [1, 8]");
  }
  if (active_features() == 0) throw ConfigError("feature mask selects no features");
}

bool Tree::vote(const FeatureVector& x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[k].positives >= nodes[k].negatives;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    deepest = std::max(deepest, d[k]);
    if (!nodes[k].is_leaf()) {
      d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
    }
  }
  return deepest;
}

Prediction Forest::predict(const FeatureVector& x) const {
  if (trees_.empty()) throw ConfigError("forest has no trees");
  std::size_t yes = 0;
  for (const auto& t : trees_) yes += t.vote(x) ? 1 : 0;
  Prediction p;
  p.score = static_cast<double>(yes) / static_cast<double>(trees_.size());
  p.label = 2 * yes >= trees_.size();
  return p;
}

std::array<std::size_t, kFeatureCount> Forest::split_counts() const {
  std::array<std::size_t, kFeatureCount> counts{};
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) ++counts[static_cast<std::size_t>(n.feature)];
    }
  }
  return counts;
}

Forest train_forest(const std::vector<FeatureVector>& samples, const std::vector<bool>& labels,
                    const ForestConfig& cfg) {
  cfg.validate();
  if (samples.size() != labels.size()) throw DataError("sample and label counts differ");
  if (samples.size() < 2) throw DataError("training needs at least two samples");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0 || positives == labels.size()) throw DataError("training data holds a single class");
  for (const auto& s : samples) {
    for (double v : s) {
      if (!std::isfinite(v)) throw DataError("training sample has a non-finite feature");
    }
  }
  if (samples.size() > std::numeric_limits<std::uint32_t>::max()) throw DataError("too many samples");

  const std::size_t n = samples.size();
  const auto trees = static_cast<std::size_t>(cfg.n_trees);
  Forest forest;
  forest.config_ = cfg;
  forest.trees_.resize(trees);
  std::vector<std::vector<std::uint8_t>> in_bag(trees);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < trees; t = next++) {
      std::mt19937_64 rng(splitmix64(cfg.seed + t));
      std::vector<std::uint32_t> bag(n);
      in_bag[t].assign(n, 0);
      for (auto& b : bag) {
        b = static_cast<std::uint32_t>(uniform_index(rng, n));
        in_bag[t][b] = 1;
      }
      TreeBuilder builder(samples, labels, cfg, rng);
      forest.trees_[t] = builder.build(std::move(bag));
    }
  };
  unsigned workers = cfg.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, trees));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) {
      pool.emplace_back([&, i] {
        try {
          work();
        } catch (...) {
          failures[i] = std::current_exception();
          next = trees;
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  std::size_t voted = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t yes = 0, total = 0;
    for (std::size_t t = 0; t < trees; ++t) {
      if (in_bag[t][i]) continue;
      ++total;
      yes += forest.trees_[t].vote(samples[i]) ? 1 : 0;
    }
    if (total == 0) continue;
    ++voted;
    correct += ((2 * yes >= total) == labels[i]) ? 1 : 0;
  }
  forest.oob_accuracy_ = voted ? static_cast<double>(correct) / static_cast<double>(voted) : -1.0;
  return forest;
}

Forest train_forest(const std::vector<VortexDescriptor>& samples, const std::vector<bool>& labels,
                    const ForestConfig& cfg) {
  std::vector<FeatureVector> x;
  x.reserve(samples.size());
  for (const auto& d : samples) x.push_back(d.w);
  return train_forest(x, labels, cfg);
}

std::string Forest::to_json() const {
  json j;
  j["format"] = kFormat;
  j["format_version"] = kFormatVersion;
  j["feature_layout"] = {{"version", layout_version_},
                         {"names", std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end())}};
  j["config"] = config_to_json(config_);
  j["oob_accuracy"] = oob_accuracy_ >= 0.0 ? json(oob_accuracy_) : json(nullptr);
  json trees = json::array();
  for (const auto& t : trees_) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         neg = json::array(), pos = json::array();
    for (const auto& nd : t.nodes) {
      feature.push_back(nd.feature);
      threshold.push_back(nd.threshold);
      left.push_back(nd.left);
      right.push_back(nd.right);
      neg.push_back(nd.negatives);
      pos.push_back(nd.positives);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"negatives", neg},
                     {"positives", pos}});
  }
  j["trees"] = std::move(trees);
  return j.dump(1) + "\n";
}

Forest Forest::from_json(const std::string& text) {
  Forest f;
  try {
    const json j = json::parse(text);
    if (j.at("format") != kFormat) throw DataError("not a forest model file");
    if (j.at("format_version").get<int>() != kFormatVersion) throw DataError("unsupported model format version");
    const auto& layout = j.at("feature_layout");
    f.layout_version_ = layout.at("version").get<int>();
    if (f.layout_version_ != kFeatureLayoutVersion ||
        layout.at("names").get<std::vector<std::string>>() !=
            std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end())) {
      throw DataError("model feature layout " + std::to_string(f.layout_version_) +
                      " does not match descriptor layout " + std::to_string(kFeatureLayoutVersion));
    }
    f.config_ = config_from_json(j.at("config"));
    f.config_.validate();
    const auto& oob = j.at("oob_accuracy");
    f.oob_accuracy_ = oob.is_null() ? -1.0 : oob.get<double>();
    for (const auto& jt : j.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<std::int32_t>>();
      const auto right = jt.at("right").get<std::vector<std::int32_t>>();
      const auto neg = jt.at("negatives").get<std::vector<std::uint32_t>>();
      const auto pos = jt.at("positives").get<std::vector<std::uint32_t>>();
      const std::size_t m = feature.size();
      if (m == 0 || threshold.size() != m || left.size() != m || right.size() != m || neg.size() != m ||
          pos.size() != m) {
        throw DataError("malformed tree arrays in model file");
      }
      Tree t;
      t.nodes.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        auto& nd = t.nodes[k];
        nd = {feature[k], threshold[k], left[k], right[k], neg[k], pos[k]};
        if (nd.is_leaf()) {
          if (nd.feature != -1) throw DataError("bad leaf marker in model file");
          continue;
        }
        const auto lo = static_cast<std::int32_t>(k);
        if (nd.feature >= static_cast<int>(kFeatureCount) || !std::isfinite(nd.threshold) || nd.left <= lo ||
            nd.right <= lo || nd.left >= static_cast<std::int32_t>(m) || nd.right >= static_cast<std::int32_t>(m)) {
          throw DataError("invalid split node in model file");
        }
      }
      f.trees_.push_back(std::move(t));
    }
    if (f.trees_.empty()) throw DataError("model file has no trees");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  return f;
}

void Forest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model '" + path.string() + "'");
  out << to_json();
}

Forest Forest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace stormflow
