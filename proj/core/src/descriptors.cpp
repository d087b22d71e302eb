#include "stormflow/descriptors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace stormflow {
namespace {

void require_shape(const GeoTransform& ref, const GeoTransform& t, const char* what) {
  if (!(ref == t)) throw DataError(std::string("descriptor input '") + what + "' is on a different grid");
}

class Fnv1a {
public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
  [[nodiscard]] std::uint64_t digest() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void hash_frame(Fnv1a& h, const SatelliteFrame& f) {
  h.value(static_cast<int>(f.channel));
  h.value(f.timestamp.time_since_epoch().count());
  h.value(f.transform.lon_origin);
  h.value(f.transform.lat_origin);
  h.value(f.transform.dlon);
  h.value(f.transform.dlat);
  h.value(static_cast<std::uint64_t>(f.transform.width));
  h.value(static_cast<std::uint64_t>(f.transform.height));
  h.bytes(f.pixels.values().data(), f.pixels.size() * sizeof(double));
  h.bytes(f.mask.values().data(), f.mask.size());
}

void round_to_float(FlowField& f) {
  for (auto& x : f.u.values()) x = static_cast<double>(static_cast<float>(x));
  for (auto& x : f.v.values()) x = static_cast<double>(static_cast<float>(x));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

VortexDescriptor compute_descriptor(const VortexRegion& region, const DescriptorInputs& in,
                                    const DescriptorOptions& opts) {
  if (!in.ch3 || !in.ch4 || !in.flow || !in.solenoidal || !in.irrotational || !in.q) {
    throw ConfigError("compute_descriptor: missing input");
  }
  if (region.pixels.empty()) throw DataError("compute_descriptor: empty region");
  const GeoTransform& t = in.flow->transform;
  require_shape(t, in.ch3->transform, "ch3");
  require_shape(t, in.ch4->transform, "ch4");
  require_shape(t, in.solenoidal->transform, "solenoidal");
  require_shape(t, in.irrotational->transform, "irrotational");
  require_shape(t, in.q->transform, "q");

  // Raster order makes the sums independent of how the region was enumerated.
  std::vector<PixelIndex> pixels = region.pixels;
  std::sort(pixels.begin(), pixels.end(),
            [](const PixelIndex& a, const PixelIndex& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  // Means accumulate offsets from the first pixel, so constant inputs
  // reproduce their value exactly.
  struct Mean {
    double ref = 0.0, sum = 0.0;
    bool started = false;
    void add(double v) {
      if (!started) {
        ref = v;
        started = true;
      }
      sum += v - ref;
    }
    [[nodiscard]] double value(double n) const { return ref + sum / n; }
  };
  Mean m1, m2, m3, m5, m6, m8, abs_angle;
  double sin_sum = 0, cos_sum = 0;
  double qmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : pixels) {
    const std::size_t x = p.x, y = p.y;
    if (x >= t.width || y >= t.height) throw DataError("region pixel outside the grid");
    if (!in.ch3->mask(x, y) || !in.ch4->mask(x, y) || !in.flow->mask(x, y) || !in.solenoidal->mask(x, y) ||
        !in.irrotational->mask(x, y) || !in.q->mask(x, y)) {
      throw DataError("region " + std::to_string(region.region_id) + " covers a masked pixel");
    }
    m1.add(in.ch3->pixels(x, y));
    m2.add(in.ch4->pixels(x, y));
    const double u = in.flow->u(x, y);
    const double v = in.flow->v(x, y);
    m3.add(std::hypot(u, v));
    const double theta = std::atan2(v, u);
    sin_sum += std::sin(theta);
    cos_sum += std::cos(theta);
    abs_angle.add(std::abs(theta));
    m5.add(velocity_gradient(*in.solenoidal, x, y).vorticity());
    m6.add(velocity_gradient(*in.irrotational, x, y).divergence());
    qmax = std::max(qmax, in.q->values(x, y));
    if (in.density) {
      const GeoPoint g = pixel_to_geo(t, static_cast<double>(x), static_cast<double>(y));
      m8.add(in.density->rho_at(g.lon, g.lat));
    } else {
      m8.add(0.0);
    }
  }
  const double n = static_cast<double>(pixels.size());
  VortexDescriptor d;
  d.region_id = region.region_id;
  d.timestamp = region.timestamp;
  d.centroid_geo = region.centroid_geo;
  double w4 = 0.0;
  if (opts.literal_direction) {
    w4 = abs_angle.value(n);
  } else {
    w4 = std::atan2(sin_sum, cos_sum);
    if (w4 <= -std::numbers::pi) w4 = std::numbers::pi;
  }
  d.w = {m1.value(n), m2.value(n), m3.value(n), w4, m5.value(n), m6.value(n), qmax, m8.value(n)};
  return d;
}

std::optional<FlowField> DirectoryFlowCache::load(const std::string& key) {
  if (!std::filesystem::exists(dir_ / (key + ".json"))) return std::nullopt;
  try {
    return load_flow(dir_, key);
  } catch (const DataError&) {
    return std::nullopt;  // a damaged entry is recomputed
  }
}

void DirectoryFlowCache::store(const std::string& key, const FlowField& flow) { save_flow(flow, dir_, key); }

std::string flow_cache_key(const SatelliteFrame& prev, const SatelliteFrame& next, const FlowParams& p) {
  Fnv1a h;
  h.value(std::uint32_t{3});  // cache format revision
  hash_frame(h, prev);
  hash_frame(h, next);
  h.value(p.pyramid_levels);
  h.value(p.window_radius);
  h.value(p.min_eigen_threshold);
  h.value(p.lk_iterations);
  h.value(p.affine);
  h.value(p.smoothing.viscosity);
  h.value(p.smoothing.dt);
  h.value(p.smoothing.iterations);
  h.value(p.smoothing.normalize);
  h.value(p.smoothing.pressure_balance);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

PairResult process_pair(const FramePair& prev, const FramePair& next, const StormDB* db,
                        const ExtractConfig& cfg, FlowCache* cache) {
  PairResult r;
  r.t_prev = prev.timestamp();
  r.t_next = next.timestamp();

  FlowField flow;
  std::string key;
  if (cache) {
    key = flow_cache_key(prev.ch4, next.ch4, cfg.flow);
    if (auto hit = cache->load(key); hit && hit->same_shape(FlowField::zeros(next.ch4.transform))) {
      flow = std::move(*hit);
      r.cache_hit = true;
    }
  }
  if (!r.cache_hit) {
    const auto [e_prev, e_next] = equalize_pair(prev.ch4, next.ch4);
    flow = stabilize_flow(lucas_kanade_dense(e_prev, e_next, cfg.flow), cfg.flow);
    round_to_float(flow);
    if (cache) cache->store(key, flow);
  }
  flow.transform = next.ch4.transform;
  flow.t_prev = r.t_prev;
  flow.t_next = r.t_next;

  auto parts = helmholtz_decompose(flow);
  ScalarField q = q_criterion(parts.solenoidal);
  r.regions = extract_vortices(q, cfg.vortex, r.t_next);
  std::sort(r.regions.begin(), r.regions.end(),
            [](const VortexRegion& a, const VortexRegion& b) { return a.region_id < b.region_id; });

  std::optional<DensityGrid> density;
  if (db && !db->coverage_years().empty()) {
    density = build_density_grid(*db, utc_day(r.t_next), cfg.density_extent, cfg.density_cell_deg);
  }
  const DescriptorInputs in{&next.ch3, &next.ch4, &flow, &parts.solenoidal, &parts.irrotational, &q,
                            density ? &*density : nullptr};
  for (const auto& region : r.regions) {
    DescriptorRow row{compute_descriptor(region, in, cfg.descriptor), std::nullopt};
    if (db) {
      const Label l = label_vortex(*db, region, cfg.label_domain);
      if (l != Label::Unlabeled) row.label = l == Label::Positive;
    }
    r.rows.push_back(row);
  }
  if (cfg.keep_fields) {
    r.flow = std::move(flow);
    r.solenoidal = std::move(parts.solenoidal);
    r.q = std::move(q);
  }
  return r;
}

std::vector<PairResult> batch_extract(const FrameSequence& seq, const StormDB* db, const ExtractConfig& cfg,
                                      FlowCache* cache) {
  cfg.flow.validate();
  if (seq.size() < 2) throw DataError("descriptor extraction needs at least two frames");
  const std::size_t jobs = seq.size() - 1;
  std::vector<PairResult> out(jobs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) {
      const auto& a = seq.pairs()[k];
      const auto& b = seq.pairs()[k + 1];
      try {
        out[k] = process_pair(a, b, db, cfg, cache);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        out[k] = PairResult{};
        out[k].t_prev = a.timestamp();
        out[k].t_next = b.timestamp();
        out[k].error = e.what();
      }
    }
  };
  unsigned workers = cfg.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs));
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) {
    pool.emplace_back([&, i] {
      try {
        work();
      } catch (...) {
        failures[i] = std::current_exception();
        next = jobs;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

std::vector<DescriptorRow> collect_rows(const std::vector<PairResult>& pairs) {
  std::vector<DescriptorRow> rows;
  for (const auto& p : pairs) rows.insert(rows.end(), p.rows.begin(), p.rows.end());
  return rows;
}

void write_descriptor_csv(const std::vector<DescriptorRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "region_id,timestamp,lon,lat";
  for (const char* name : kFeatureNames) out << ',' << name;
  out << ",label\n";
  for (const auto& r : rows) {
    const auto& d = r.descriptor;
    out << d.region_id << ',' << format_utc(d.timestamp) << ',' << format_double(d.centroid_geo.lon) << ','
        << format_double(d.centroid_geo.lat);
    for (double w : d.w) out << ',' << format_double(w);
    out << ',' << (r.label ? (*r.label ? "1" : "0") : "") << '\n';
  }
}

std::vector<DescriptorRow> read_descriptor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open descriptor table '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<DescriptorRow> rows;
  constexpr std::size_t kColumns = 4 + kFeatureCount + 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (line_no == 1) {
      if (cells.size() != kColumns || cells[0] != "region_id" || cells.back() != "label") {
        throw DataError("'" + path.string() + "' is not a descriptor table");
      }
      continue;
    }
    if (cells.size() != kColumns) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(kColumns) + " columns");
    }
    DescriptorRow r;
    try {
      r.descriptor.region_id = std::stoull(cells[0]);
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(line_no) + ": malformed region_id");
    }
    r.descriptor.timestamp = parse_utc(cells[1]);
    r.descriptor.centroid_geo = {parse_double(cells[2], line_no), parse_double(cells[3], line_no)};
    for (std::size_t k = 0; k < kFeatureCount; ++k) r.descriptor.w[k] = parse_double(cells[4 + k], line_no);
    const auto& l = cells.back();
    if (l == "1" || l == "true") {
      r.label = true;
    } else if (l == "0" || l == "false") {
      r.label = false;
    } else if (!l.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": label must be 1, 0 or empty");
    }
    rows.push_back(r);
  }
  if (line_no == 0) throw DataError("descriptor table '" + path.string() + "' is empty");
  return rows;
}

}  // namespace stormflow
