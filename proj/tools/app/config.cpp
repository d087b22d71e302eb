#include "config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>

#include "json.hpp"

namespace stormflow::app {
namespace {

using nlohmann::json;

class Section {
public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("'" + name_ + "' must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) throw ConfigError("unknown key '" + where(k) + "'");
    }
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("bad value for '" + where(key) + "'");
    }
  }

  [[nodiscard]] Section child(const char* key) const { return {j_.at(key), where(key)}; }
  [[nodiscard]] const json& raw(const char* key) const { return j_.at(key); }
  [[nodiscard]] std::string where(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

private:
  const json& j_;
  std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

void require_dir(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::is_directory(p)) throw ConfigError(what + " directory '" + p.string() + "' does not exist");
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::is_regular_file(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

void read_window(const Section& s, DateWindow& w) {
  std::vector<int> days, hours;
  if (s.has("days")) {
    s.read("days", days);
    if (days.size() != 2 || days[0] < 1 || days[1] > 31 || days[0] > days[1]) {
      throw ConfigError("'" + s.where("days") + "' must be [first, last] within 1..31");
    }
    w.first_day = days[0];
    w.last_day = days[1];
  }
  if (s.has("hours")) {
    s.read("hours", hours);
    if (hours.size() != 2 || hours[0] < 0 || hours[1] > 24 || hours[0] >= hours[1]) {
      throw ConfigError("'" + s.where("hours") + "' must be [begin, end) within 0..24");
    }
    w.hour_begin = hours[0];
    w.hour_end = hours[1];
  }
}

void read_split(const Section& s, const std::filesystem::path& base, SplitConfig& split) {
  s.allow({"days", "hours", "descriptors", "balanced"});
  read_window(s, split.window);
  s.read("balanced", split.balanced);
  if (s.has("descriptors")) {
    std::string p;
    s.read("descriptors", p);
    split.descriptors = resolve(base, p);
    require_file(*split.descriptors, "descriptor table");
  }
}

}  // namespace

bool DateWindow::contains(TimePoint t) const {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const int d = static_cast<int>(static_cast<unsigned>(ymd.day()));
  const auto hour = std::chrono::duration_cast<std::chrono::hours>(t - day).count();
  return d >= first_day && d <= last_day && hour >= hour_begin && hour < hour_end;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }

  PipelineConfig c;
  c.source = path;
  const auto base = std::filesystem::absolute(path).parent_path();
  const Section top(root, "");
  top.allow({"inputs", "output_dir", "cache_dir", "write_rasters", "seed", "workers", "flow", "vortex", "descriptor",
             "domain", "density", "forest", "cross_validation", "train", "test", "lead_time_edges_hours"});

  if (!top.has("inputs")) throw ConfigError("missing 'inputs' section");
  {
    const auto s = top.child("inputs");
    s.allow({"ch3_dir", "ch4_dir", "storm_csv", "coverage_years", "spacing_minutes", "max_channel_skew_seconds",
             "chunk_frames"});
    std::string ch3, ch4;
    if (!s.has("ch3_dir") || !s.has("ch4_dir")) throw ConfigError("'inputs' needs ch3_dir and ch4_dir");
    s.read("ch3_dir", ch3);
    s.read("ch4_dir", ch4);
    c.ch3_dir = resolve(base, ch3);
    c.ch4_dir = resolve(base, ch4);
    require_dir(c.ch3_dir, "ch3");
    require_dir(c.ch4_dir, "ch4");
    if (s.has("storm_csv")) {
      std::string p;
      s.read("storm_csv", p);
      c.storm_csv = resolve(base, p);
      require_file(*c.storm_csv, "storm report file");
    }
    s.read("coverage_years", c.coverage_years);
    double minutes = 30.0, skew = 120.0;
    s.read("spacing_minutes", minutes);
    s.read("max_channel_skew_seconds", skew);
    if (!(minutes > 0.0)) throw ConfigError("'inputs.spacing_minutes' must be positive");
    if (!(skew >= 0.0)) throw ConfigError("'inputs.max_channel_skew_seconds' must be non-negative");
    c.spacing = std::chrono::seconds(static_cast<long long>(minutes * 60.0));
    c.max_channel_skew = std::chrono::seconds(static_cast<long long>(skew));
    s.read("chunk_frames", c.chunk_frames);
    if (c.chunk_frames < 2) throw ConfigError("'inputs.chunk_frames' must be at least 2");
  }

  std::string out = "out";
  top.read("output_dir", out);
  c.output_dir = resolve(base, out);
  if (top.has("cache_dir")) {
    const auto& v = root.at("cache_dir");
    if (v.is_boolean()) {
      if (v.get<bool>()) c.cache_dir = c.output_dir / "cache";
    } else {
      std::string p;
      top.read("cache_dir", p);
      c.cache_dir = resolve(base, p);
    }
  } else {
    c.cache_dir = c.output_dir / "cache";
  }
  top.read("write_rasters", c.write_rasters);
  top.read("seed", c.seed);
  top.read("workers", c.extract.workers);

  if (top.has("flow")) {
    const auto s = top.child("flow");
    s.allow({"pyramid_levels", "window_radius", "min_eigen_threshold", "lk_iterations", "affine", "viscosity", "dt",
             "iterations", "normalize", "pressure_balance"});
    auto& f = c.extract.flow;
    s.read("pyramid_levels", f.pyramid_levels);
    s.read("window_radius", f.window_radius);
    s.read("min_eigen_threshold", f.min_eigen_threshold);
    s.read("lk_iterations", f.lk_iterations);
    s.read("affine", f.affine);
    s.read("viscosity", f.smoothing.viscosity);
    s.read("dt", f.smoothing.dt);
    s.read("iterations", f.smoothing.iterations);
    s.read("normalize", f.smoothing.normalize);
    s.read("pressure_balance", f.smoothing.pressure_balance);
  }
  c.extract.flow.validate();

  if (top.has("vortex")) {
    const auto s = top.child("vortex");
    s.allow({"min_area_px", "dilation_px", "q_min"});
    s.read("min_area_px", c.extract.vortex.min_area_px);
    s.read("dilation_px", c.extract.vortex.dilation_px);
    s.read("q_min", c.extract.vortex.q_min);
    if (c.extract.vortex.dilation_px < 0) throw ConfigError("'vortex.dilation_px' must be non-negative");
    if (!(c.extract.vortex.q_min >= 0.0)) throw ConfigError("'vortex.q_min' must be non-negative");
  }

  if (top.has("descriptor")) {
    const auto s = top.child("descriptor");
    s.allow({"literal_direction"});
    s.read("literal_direction", c.extract.descriptor.literal_direction);
  }

  if (top.has("domain")) {
    const auto s = top.child("domain");
    s.allow({"lon_min", "lon_max", "lat_min", "lat_max", "polygon"});
    auto& b = c.extract.label_domain.box;
    s.read("lon_min", b.lon_min);
    s.read("lon_max", b.lon_max);
    s.read("lat_min", b.lat_min);
    s.read("lat_max", b.lat_max);
    if (!(b.lon_min < b.lon_max && b.lat_min < b.lat_max)) throw ConfigError("'domain' box is empty");
    if (s.has("polygon")) {
      std::string p;
      s.read("polygon", p);
      const auto poly = resolve(base, p);
      require_file(poly, "domain polygon");
      try {
        c.extract.label_domain.polygon = read_polygon(poly);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }
    c.extract.density_extent = b;
  }

  if (top.has("density")) {
    const auto s = top.child("density");
    s.allow({"cell_deg"});
    s.read("cell_deg", c.extract.density_cell_deg);
    if (!(c.extract.density_cell_deg > 0.0)) throw ConfigError("'density.cell_deg' must be positive");
  }

  if (top.has("forest")) {
    const auto s = top.child("forest");
    s.allow({"n_trees", "max_depth", "min_leaf", "features_per_split", "workers"});
    s.read("n_trees", c.forest.n_trees);
    s.read("max_depth", c.forest.max_depth);
    s.read("min_leaf", c.forest.min_leaf);
    s.read("features_per_split", c.forest.features_per_split);
    s.read("workers", c.forest.workers);
  }
  c.forest.seed = c.seed;
  c.forest.validate();

  if (top.has("cross_validation")) {
    const auto s = top.child("cross_validation");
    s.allow({"folds", "ablation"});
    s.read("folds", c.folds);
    s.read("ablation", c.ablation);
    if (c.folds < 2) throw ConfigError("'cross_validation.folds' must be at least 2");
  }

  if (top.has("train")) read_split(top.child("train"), base, c.train);
  if (top.has("test")) read_split(top.child("test"), base, c.test);

  c.lead_time_edges = default_lead_time_edges();
  top.read("lead_time_edges_hours", c.lead_time_edges);
  return c;
}

}  // namespace stormflow::app
