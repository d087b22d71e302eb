#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stormflow/descriptors.hpp"
#include "stormflow/field_analysis.hpp"
#include "stormflow/forest.hpp"

namespace stormflow::app {

/// Closed ring of pixel-corner coordinates; first vertex repeated at the end.
using Ring = std::vector<PixelPoint>;

struct PolygonRings {
  Ring outer;  // counter-clockwise in lon/lat
  std::vector<Ring> holes;  // clockwise
};

/// Outline of the union of the region's pixel squares. Squares meeting only
/// at a corner become separate polygons. Collinear vertices are dropped.
std::vector<PolygonRings> trace_region(const std::vector<PixelIndex>& pixels);

struct DetectedVortex {
  VortexRegion region;
  VortexDescriptor descriptor;
  Prediction prediction;
};

/// FeatureCollection text with one Polygon or MultiPolygon feature per
/// vortex (lon,lat order) and a top-level "stormflow" member holding the run
/// seed and pair times.
std::string detections_geojson(const std::vector<DetectedVortex>& vortices, const GeoTransform& transform,
                               TimePoint t_prev, TimePoint t_next, std::uint64_t seed);

}  // namespace stormflow::app
