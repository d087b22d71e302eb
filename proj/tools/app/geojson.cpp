#include "geojson.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace stormflow::app {
namespace {

struct Edge {
  std::int64_t x0, y0, x1, y1;
  PixelIndex pixel;  // region pixel on the left of the edge (lon/lat frame)
};

std::uint64_t vertex_key(std::int64_t x, std::int64_t y) {
  return (static_cast<std::uint64_t>(x) << 32) | static_cast<std::uint64_t>(y);
}

// Shoelace area with y flipped so that it matches the lon/lat orientation.
double signed_area(const Ring& r) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) a += r[i].x * -r[i + 1].y - r[i + 1].x * -r[i].y;
  return 0.5 * a;
}

bool ring_contains(const Ring& r, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = r.size() - 2; i + 1 < r.size(); j = i++) {
    const auto& a = r[i];
    const auto& b = r[j];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

}  // namespace

std::vector<PolygonRings> trace_region(const std::vector<PixelIndex>& pixels) {
  std::unordered_set<std::uint64_t> member;
  member.reserve(pixels.size() * 2);
  for (const auto& p : pixels) member.insert(vertex_key(p.x, p.y));
  auto has = [&](std::int64_t x, std::int64_t y) { return x >= 0 && y >= 0 && member.count(vertex_key(x, y)) > 0; };

  // Each exposed side becomes a directed edge with its pixel on the left when
  // y is flipped to point north.
  std::vector<Edge> edges;
  for (const auto& p : pixels) {
    const std::int64_t x = p.x, y = p.y;
    if (!has(x, y + 1)) edges.push_back({x, y + 1, x + 1, y + 1, p});
    if (!has(x + 1, y)) edges.push_back({x + 1, y + 1, x + 1, y, p});
    if (!has(x, y - 1)) edges.push_back({x + 1, y, x, y, p});
    if (!has(x - 1, y)) edges.push_back({x, y, x, y + 1, p});
  }
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> outgoing;
  for (std::size_t i = 0; i < edges.size(); ++i) outgoing[vertex_key(edges[i].x0, edges[i].y0)].push_back(i);

  // Successor of an edge: the sharpest left turn among the edges leaving its
  // end vertex. This keeps corner-touching squares in separate rings.
  auto next_edge = [&](std::size_t e) {
    const auto& in = edges[e];
    const std::int64_t ix = in.x1 - in.x0, iy = -(in.y1 - in.y0);
    std::size_t best = 0;
    std::int64_t best_turn = -2;
    for (auto o : outgoing.at(vertex_key(in.x1, in.y1))) {
      const auto& out = edges[o];
      const std::int64_t ox = out.x1 - out.x0, oy = -(out.y1 - out.y0);
      const std::int64_t turn = ix * oy - iy * ox;
      if (turn > best_turn) {
        best_turn = turn;
        best = o;
      }
    }
    return best;
  };

  std::vector<Ring> rings;
  std::vector<PixelIndex> ring_pixel;
  std::vector<bool> used(edges.size(), false);
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    std::vector<std::size_t> chain;
    for (std::size_t e = start; !used[e]; e = next_edge(e)) {
      used[e] = true;
      chain.push_back(e);
    }
    Ring ring;
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const auto& prev = edges[chain[(k + chain.size() - 1) % chain.size()]];
      const auto& cur = edges[chain[k]];
      const bool straight = (prev.x1 - prev.x0) == (cur.x1 - cur.x0) && (prev.y1 - prev.y0) == (cur.y1 - cur.y0);
      if (!straight) ring.push_back({static_cast<double>(cur.x0), static_cast<double>(cur.y0)});
    }
    ring.push_back(ring.front());
    rings.push_back(std::move(ring));
    ring_pixel.push_back(edges[start].pixel);
  }

  std::vector<PolygonRings> polys;
  std::vector<double> outer_area;
  std::vector<std::size_t> holes;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const double a = signed_area(rings[r]);
    if (a > 0.0) {
      polys.push_back({rings[r], {}});
      outer_area.push_back(a);
    } else {
      holes.push_back(r);
    }
  }
  for (auto h : holes) {
    const double px = ring_pixel[h].x + 0.5, py = ring_pixel[h].y + 0.5;
    std::size_t owner = polys.size();
    for (std::size_t k = 0; k < polys.size(); ++k) {
      if (ring_contains(polys[k].outer, px, py) && (owner == polys.size() || outer_area[k] < outer_area[owner])) {
        owner = k;
      }
    }
    if (owner < polys.size()) polys[owner].holes.push_back(rings[h]);
  }
  return polys;
}

std::string detections_geojson(const std::vector<DetectedVortex>& vortices, const GeoTransform& transform,
                               TimePoint t_prev, TimePoint t_next, std::uint64_t seed) {
  using nlohmann::ordered_json;
  auto ring_json = [&](const Ring& r) {
    ordered_json out = ordered_json::array();
    for (const auto& p : r) {
      const GeoPoint g = corner_to_geo(transform, p.x, p.y);
      out.push_back({g.lon, g.lat});
    }
    return out;
  };

  ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["stormflow"] = {{"seed", seed}, {"t_prev", format_utc(t_prev)}, {"t_next", format_utc(t_next)}};
  fc["features"] = ordered_json::array();
  for (const auto& v : vortices) {
    const auto polys = trace_region(v.region.pixels);
    ordered_json coords = ordered_json::array();
    for (const auto& p : polys) {
      ordered_json rings = ordered_json::array();
      rings.push_back(ring_json(p.outer));
      for (const auto& h : p.holes) rings.push_back(ring_json(h));
      coords.push_back(std::move(rings));
    }
    ordered_json geometry;
    if (coords.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", coords[0]}};
    } else {
      geometry = {{"type", "MultiPolygon"}, {"coordinates", coords}};
    }
    ordered_json props;
    props["region_id"] = v.region.region_id;
    props["timestamp"] = format_utc(v.descriptor.timestamp);
    props["score"] = v.prediction.score;
    props["label"] = v.prediction.label;
    for (std::size_t k = 0; k < kFeatureCount; ++k) props[kFeatureNames[k]] = v.descriptor.w[k];
    fc["features"].push_back({{"type", "Feature"}, {"geometry", geometry}, {"properties", props}});
  }
  return fc.dump() + "\n";
}

}  // namespace stormflow::app
