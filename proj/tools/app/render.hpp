#pragma once

#include "geojson.hpp"
#include "stormflow/evaluation.hpp"
#include "stormflow/raster_io.hpp"

namespace stormflow::app {

/// Grayscale ch4 backdrop (masked pixels black) with vortex pixels tinted
/// red when classified as storms and green otherwise.
io::RgbImage detection_overlay(const SatelliteFrame& ch4, const std::vector<DetectedVortex>& vortices);

/// Bars for the vortex count per lead-time bucket (ongoing first, beyond
/// last) and a line for the fraction predicted as storm, on a 0..1 axis.
io::RgbImage lead_time_chart(const LeadTimeCurve& curve, std::size_t width = 640, std::size_t height = 360);

}  // namespace stormflow::app
