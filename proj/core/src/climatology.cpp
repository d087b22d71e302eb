#include "stormflow/climatology.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"
#include "stormflow/random.hpp"

namespace stormflow {
namespace {

using namespace std::chrono_literals;

constexpr double kNear = 3.0;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double parse_number(std::string_view text, const char* what, std::size_t line_no) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": malformed " + what + " '" + s + "'");
  }
  return v;
}

bool is_leap(int y) { return std::chrono::year{y}.is_leap(); }

bool near(const StormReport& r, double lat, double lon) {
  return std::abs(r.lat - lat) < kNear && std::abs(r.lon - lon) < kNear;
}

}  // namespace

std::string_view to_string(StormKind k) {
  switch (k) {
    case StormKind::Hail: return "hail";
    case StormKind::Tornado: return "tornado";
    case StormKind::Wind: return "wind";
    case StormKind::Other: break;
  }
  return "other";
}

StormKind parse_storm_kind(std::string_view text) {
  const auto s = lower(trim(text));
  if (s == "hail") return StormKind::Hail;
  if (s == "tornado" || s == "torn") return StormKind::Tornado;
  if (s == "wind") return StormKind::Wind;
  return StormKind::Other;
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Positive: return "1";
    case Label::Negative: return "0";
    case Label::Unlabeled: break;
  }
  return "";
}

StormDB::StormDB(std::vector<StormReport> reports, std::set<int> coverage_years)
    : reports_(std::move(reports)), years_(std::move(coverage_years)) {
  std::stable_sort(reports_.begin(), reports_.end(),
                   [](const StormReport& a, const StormReport& b) { return a.start_time < b.start_time; });
  if (years_.empty()) {
    for (const auto& r : reports_) years_.insert(static_cast<int>(utc_day(r.start_time).year()));
  }
  for (std::size_t i = 0; i < reports_.size(); ++i) {
    const auto& r = reports_[i];
    buckets_[key(static_cast<long>(std::floor(r.lat)), static_cast<long>(std::floor(r.lon)))].push_back(
        static_cast<std::uint32_t>(i));
  }
}

std::pair<std::size_t, std::size_t> StormDB::time_range(TimePoint from, TimePoint to) const {
  const auto lo = std::lower_bound(reports_.begin(), reports_.end(), from,
                                   [](const StormReport& r, TimePoint t) { return r.start_time < t; });
  const auto hi = std::upper_bound(reports_.begin(), reports_.end(), to,
                                   [](TimePoint t, const StormReport& r) { return t < r.start_time; });
  return {static_cast<std::size_t>(lo - reports_.begin()), static_cast<std::size_t>(hi - reports_.begin())};
}

StormDB ingest_reports(const std::filesystem::path& csv_path, std::set<int> coverage_years) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open storm reports '" + csv_path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  int c_time = -1, c_lat = -1, c_lon = -1, c_kind = -1;
  std::vector<StormReport> reports;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!have_header) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto name = lower(cells[c]);
        if (name == "time") c_time = static_cast<int>(c);
        if (name == "lat") c_lat = static_cast<int>(c);
        if (name == "lon") c_lon = static_cast<int>(c);
        if (name == "kind") c_kind = static_cast<int>(c);
      }
      if (c_time < 0 || c_lat < 0 || c_lon < 0 || c_kind < 0) {
        throw DataError("line " + std::to_string(line_no) +
                        ": storm report header must name time,lat,lon,kind");
      }
      have_header = true;
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max({c_time, c_lat, c_lon, c_kind}));
    if (cells.size() <= need) {
      throw DataError("line " + std::to_string(line_no) + ": expected at least " +
                      std::to_string(need + 1) + " columns");
    }
    StormReport r;
    try {
      r.start_time = parse_utc(cells[static_cast<std::size_t>(c_time)]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    r.lat = parse_number(cells[static_cast<std::size_t>(c_lat)], "lat", line_no);
    r.lon = parse_number(cells[static_cast<std::size_t>(c_lon)], "lon", line_no);
    r.kind = parse_storm_kind(cells[static_cast<std::size_t>(c_kind)]);
    if (r.lat < -90.0 || r.lat > 90.0) {
      throw DataError("line " + std::to_string(line_no) + ": lat out of [-90,90]");
    }
    if (r.lon < -180.0 || r.lon > 180.0) {
      throw DataError("line " + std::to_string(line_no) + ": lon out of [-180,180]");
    }
    reports.push_back(r);
  }
  if (!have_header) throw DataError("storm report file '" + csv_path.string() + "' is empty");
  return StormDB(std::move(reports), std::move(coverage_years));
}

bool LabelDomain::contains(double lon, double lat) const {
  if (!box.contains(lon, lat)) return false;
  if (polygon.size() < 3) return true;
  bool inside = false;
  for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
    const auto& a = polygon[i];
    const auto& b = polygon[j];
    if ((a.lat > lat) != (b.lat > lat) &&
        lon < (b.lon - a.lon) * (lat - a.lat) / (b.lat - a.lat) + a.lon) {
      inside = !inside;
    }
  }
  return inside;
}

std::vector<GeoPoint> read_polygon(const std::filesystem::path& geojson_path) {
  std::ifstream in(geojson_path);
  if (!in) throw ConfigError("cannot open polygon file '" + geojson_path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("type") == "FeatureCollection") j = j.at("features").at(0);
    if (j.at("type") == "Feature") j = j.at("geometry");
    if (j.at("type") != "Polygon") throw ConfigError("polygon file must hold a Polygon geometry");
    std::vector<GeoPoint> ring;
    for (const auto& p : j.at("coordinates").at(0)) {
      ring.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    if (ring.size() < 3) throw ConfigError("polygon ring needs at least 3 vertices");
    return ring;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed polygon file '" + geojson_path.string() + "': " + e.what());
  }
}

std::optional<std::pair<std::size_t, std::size_t>> DensityGrid::cell_of(double lon, double lat) const {
  if (!extent.contains(lon, lat)) return std::nullopt;
  const auto i = static_cast<std::size_t>(std::floor((lon - extent.lon_min) / cell_deg));
  const auto j = static_cast<std::size_t>(std::floor((extent.lat_max - lat) / cell_deg));
  return std::pair{std::min(i, cols - 1), std::min(j, rows - 1)};
}

double DensityGrid::rho_at(double lon, double lat) const {
  const auto c = cell_of(lon, lat);
  return c ? rho(c->first, c->second) : 0.0;
}

DensityGrid build_density_grid(const StormDB& db, CalendarDay date, const GeoBox& extent,
                               double cell_deg) {
  if (!date.ok()) throw ConfigError("invalid query date");
  if (!(cell_deg > 0.0)) throw ConfigError("cell size must be positive");
  if (!(extent.lon_max > extent.lon_min) || !(extent.lat_max > extent.lat_min)) {
    throw ConfigError("density grid extent is empty");
  }
  if (db.coverage_years().empty()) throw DataError("storm database has no coverage years");

  DensityGrid g;
  g.date = date;
  g.cell_deg = cell_deg;
  g.extent = extent;
  g.cols = static_cast<std::size_t>(std::ceil((extent.lon_max - extent.lon_min) / cell_deg - 1e-9));
  g.rows = static_cast<std::size_t>(std::ceil((extent.lat_max - extent.lat_min) / cell_deg - 1e-9));
  g.window_days = 11 * static_cast<int>(db.coverage_years().size());
  g.counts.assign(g.cols * g.rows, 0);

  const unsigned month = static_cast<unsigned>(date.month());
  const unsigned day = static_cast<unsigned>(date.day());
  for (int year : db.coverage_years()) {
    unsigned d = day;
    if (month == 2 && day == 29 && !is_leap(year)) d = 28;
    const std::chrono::sys_days center{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{d}};
    const TimePoint from = center - std::chrono::days{5};
    const TimePoint to = center + std::chrono::days{6} - 1s;
    const auto [lo, hi] = db.time_range(from, to);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& r = db.reports()[k];
      if (const auto c = g.cell_of(r.lon, r.lat)) ++g.counts[c->second * g.cols + c->first];
    }
  }
  return g;
}

void write_density_csv(const DensityGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "i,j,lon_min,lat_min,rho\n";
  char buf[128];
  for (std::size_t j = 0; j < grid.rows; ++j) {
    for (std::size_t i = 0; i < grid.cols; ++i) {
      const double lon_min = grid.extent.lon_min + static_cast<double>(i) * grid.cell_deg;
      const double lat_min = grid.extent.lat_max - static_cast<double>(j + 1) * grid.cell_deg;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.6g,%.6g,%.17g\n", i, j, lon_min, lat_min, grid.rho(i, j));
      out << buf;
    }
  }
}

bool storm_near(const StormDB& db, double lat, double lon, TimePoint t) {
  const TimePoint from = t - 30min;
  const TimePoint to = t + 2h;
  bool found = false;
  db.for_each_bucket(lat, lon, kNear, [&](const std::vector<std::uint32_t>& idx) {
    if (found) return;
    auto it = std::lower_bound(idx.begin(), idx.end(), from, [&](std::uint32_t k, TimePoint tp) {
      return db.reports()[k].start_time < tp;
    });
    for (; it != idx.end(); ++it) {
      const auto& r = db.reports()[*it];
      if (r.start_time > to) break;
      if (near(r, lat, lon)) {
        found = true;
        return;
      }
    }
  });
  return found;
}

Label label_vortex(const StormDB& db, const VortexRegion& v, const LabelDomain& domain) {
  const auto& c = v.centroid_geo;
  if (!domain.contains(c.lon, c.lat)) return Label::Unlabeled;
  return storm_near(db, c.lat, c.lon, v.timestamp) ? Label::Positive : Label::Negative;
}

std::optional<TimePoint> earliest_storm_time(const StormDB& db, double lat, double lon, TimePoint t) {
  const TimePoint after = t - 2h;
  std::optional<TimePoint> best;
  db.for_each_bucket(lat, lon, kNear, [&](const std::vector<std::uint32_t>& idx) {
    auto it = std::upper_bound(idx.begin(), idx.end(), after, [&](TimePoint tp, std::uint32_t k) {
      return tp < db.reports()[k].start_time;
    });
    for (; it != idx.end(); ++it) {
      const auto& r = db.reports()[*it];
      if (best && r.start_time >= *best) break;
      if (near(r, lat, lon)) {
        best = r.start_time;
        break;
      }
    }
  });
  return best;
}

std::vector<std::size_t> balanced_indices(const std::vector<bool>& labels, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (neg.size() < pos.size()) {
    throw DataError("balanced sampling needs at least as many negatives (" + std::to_string(neg.size()) +
                    ") as positives (" + std::to_string(pos.size()) + ")");
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first pos.size() slots become the sample.
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(uniform_index(rng, neg.size() - k));
    std::swap(neg[k], neg[pick]);
  }
  neg.resize(pos.size());
  std::vector<std::size_t> out = pos;
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace stormflow
