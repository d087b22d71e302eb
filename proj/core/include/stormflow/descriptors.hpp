#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stormflow/climatology.hpp"
#include "stormflow/field_analysis.hpp"
#include "stormflow/geo_imaging.hpp"
#include "stormflow/optical_flow.hpp"

namespace stormflow {

inline constexpr std::size_t kFeatureCount = 8;
/// Bumped whenever the meaning or order of w1..w8 changes.
inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"w1", "w2", "w3", "w4",
                                                                         "w5", "w6", "w7", "w8"};

using FeatureVector = std::array<double, kFeatureCount>;

struct VortexDescriptor {
  /// Mean ch3 and ch4 brightness, mean flow speed, mean flow direction,
  /// mean solenoidal vorticity, mean irrotational divergence, max Q and
  /// mean storm density, in that order.
  FeatureVector w{};
  std::uint64_t region_id = 0;
  TimePoint timestamp{};
  GeoPoint centroid_geo;

  bool operator==(const VortexDescriptor&) const = default;
};

struct DescriptorOptions {
  /// w4 as the arithmetic mean of |atan2(v, u)| instead of the circular mean.
  bool literal_direction = false;
};

/// Per-pixel inputs sharing one grid. `density` may be null (w8 = 0).
struct DescriptorInputs {
  const SatelliteFrame* ch3 = nullptr;
  const SatelliteFrame* ch4 = nullptr;
  const FlowField* flow = nullptr;
  const FlowField* solenoidal = nullptr;
  const FlowField* irrotational = nullptr;
  const ScalarField* q = nullptr;
  const DensityGrid* density = nullptr;
};

/// Throws DataError on a transform mismatch, an empty region or a region
/// pixel that is masked in any input.
VortexDescriptor compute_descriptor(const VortexRegion& region, const DescriptorInputs& in,
                                    const DescriptorOptions& opts = {});

struct DescriptorRow {
  VortexDescriptor descriptor;
  std::optional<bool> label;

  bool operator==(const DescriptorRow&) const = default;
};

/// Stores stabilized flows between runs. Keys come from flow_cache_key().
class FlowCache {
public:
  virtual ~FlowCache() = default;
  virtual std::optional<FlowField> load(const std::string& key) = 0;
  virtual void store(const std::string& key, const FlowField& flow) = 0;
};

/// Directory-backed cache: <dir>/<key>_u.f32, _v.f32, .json.
class DirectoryFlowCache : public FlowCache {
public:
  explicit DirectoryFlowCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<FlowField> load(const std::string& key) override;
  void store(const std::string& key, const FlowField& flow) override;

private:
  std::filesystem::path dir_;
};

/// 16 hex digits of FNV-1a over both frames' grids, masks, timestamps and
/// every parameter that influences the stabilized flow.
std::string flow_cache_key(const SatelliteFrame& prev, const SatelliteFrame& next, const FlowParams& params);

struct ExtractConfig {
  FlowParams flow;
  VortexExtraction vortex{20, 0, 1e-3};
  DescriptorOptions descriptor;
  LabelDomain label_domain;
  GeoBox density_extent;
  double density_cell_deg = 4.0;
  /// Worker threads for frame pairs; 0 picks the hardware concurrency.
  unsigned workers = 1;
  /// Keep the per-pair flow fields and Q raster in the result.
  bool keep_fields = false;
};

struct PairResult {
  TimePoint t_prev{};
  TimePoint t_next{};
  /// Regions sorted by region_id; rows[i] describes regions[i].
  std::vector<VortexRegion> regions;
  std::vector<DescriptorRow> rows;
  /// Empty on success; otherwise the reason the pair was skipped.
  std::string error;
  bool cache_hit = false;
  std::optional<FlowField> flow;
  std::optional<FlowField> solenoidal;
  std::optional<ScalarField> q;
};

/// Runs one frame pair through equalize, flow, stabilize, decompose, Q,
/// extraction and descriptors. Flow is estimated on ch4 and stored rounded
/// to single precision so cached and fresh runs agree bit for bit.
PairResult process_pair(const FramePair& prev, const FramePair& next, const StormDB* db,
                        const ExtractConfig& cfg, FlowCache* cache = nullptr);

/// Processes every adjacent pair, in parallel when cfg.workers > 1. Results
/// are in sequence order regardless of scheduling. Pairs failing with a
/// library error are kept with `error` set.
std::vector<PairResult> batch_extract(const FrameSequence& seq, const StormDB* db, const ExtractConfig& cfg,
                                      FlowCache* cache = nullptr);

std::vector<DescriptorRow> collect_rows(const std::vector<PairResult>& pairs);

/// CSV with header region_id,timestamp,lon,lat,w1..w8,label; label is 1, 0
/// or empty.
void write_descriptor_csv(const std::vector<DescriptorRow>& rows, const std::filesystem::path& path);
std::vector<DescriptorRow> read_descriptor_csv(const std::filesystem::path& path);

}  // namespace stormflow
