#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"
#include "stormflow/random.hpp"
#include "stormflow/synthetic.hpp"

namespace stormflow::app {
namespace {

void write_frames(const std::vector<FramePair>& pairs, const std::filesystem::path& dir) {
  for (const auto& p : pairs) {
    const auto stem = file_stamp(p.timestamp());
    save_frame(p.ch3, dir / "ch3" / (stem + ".f32"), dir / "ch3" / (stem + ".json"));
    save_frame(p.ch4, dir / "ch4" / (stem + ".f32"), dir / "ch4" / (stem + ".json"));
  }
}

TimePoint noon(int year, int month, int day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw ConfigError("invalid dataset date");
  return TimePoint{std::chrono::sys_days{ymd}} + std::chrono::hours{12};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& name) {
  if (name == "rankine") return Scenario::Rankine;
  if (name == "shear") return Scenario::Shear;
  if (name == "still") return Scenario::Still;
  if (name == "storms") return Scenario::Storms;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::vector<TruthVortex> write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir) {
  if (spec.frames < 2) throw ConfigError("a dataset needs at least two frames per day");
  if (spec.days.empty()) throw ConfigError("a dataset needs at least one day");
  std::filesystem::create_directories(dir / "ch3");
  std::filesystem::create_directories(dir / "ch4");
  const GeoTransform domain = synthetic::conus_domain(spec.width, spec.height);
  const auto spacing = std::chrono::minutes{30};

  std::vector<TruthVortex> truth;
  std::vector<std::string> storms;
  std::mt19937_64 rng(splitmix64(spec.seed));

  if (spec.scenario != Scenario::Storms) {
    synthetic::AnalyticField carrier{{}, domain};
    const PixelPoint c{spec.width / 2.0, spec.height / 2.0};
    if (spec.scenario == Scenario::Rankine) {
      carrier.components.push_back(synthetic::Rankine{c, spec.core_radius, spec.omega});
    } else if (spec.scenario == Scenario::Shear) {
      carrier.components.push_back(synthetic::Shear{spec.gamma, spec.height / 2.0});
    }
    const TimePoint t0 = noon(spec.year, spec.month, spec.days.front());
    write_frames(synthetic::render_sequence(spec.seed, carrier, spec.frames, t0, spacing), dir);
    if (spec.scenario == Scenario::Rankine) {
      for (std::size_t k = 1; k < spec.frames; ++k) {
        truth.push_back({t0 + spacing * static_cast<long>(k), c, pixel_to_geo(domain, c.x, c.y), spec.omega, false});
      }
    }
  } else {
    if (spec.vortices < 1) throw ConfigError("storm scenario needs at least one vortex per day");
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.vortices))));
    const int rows = (spec.vortices + cols - 1) / cols;
    const double cw = static_cast<double>(spec.width) / cols, ch = static_cast<double>(spec.height) / rows;
    // Coarsen the grid so neighbouring vortices stay well beyond the 3 degree
    // labeling radius of each other's storm reports.
    const double deg = std::max(domain.dlon, 5.0 / std::min(cw, ch));
    const GeoTransform storm_domain{domain.lon_origin, domain.lat_origin, deg, -deg, spec.width, spec.height};
    for (int day : spec.days) {
      const TimePoint t0 = noon(spec.year, spec.month, day);
      std::vector<int> order(static_cast<std::size_t>(spec.vortices));
      for (int i = 0; i < spec.vortices; ++i) order[static_cast<std::size_t>(i)] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

      synthetic::AnalyticField carrier{{}, storm_domain};
      std::vector<TruthVortex> today;
      for (int slot = 0; slot < spec.vortices; ++slot) {
        const bool storm = order[static_cast<std::size_t>(slot)] < (spec.vortices + 1) / 2;
        const double jx = (uniform_unit(rng) - 0.5) * cw / 4, jy = (uniform_unit(rng) - 0.5) * ch / 4;
        const PixelPoint c{(slot % cols + 0.5) * cw + jx, (slot / cols + 0.5) * ch + jy};
        const double omega = storm ? 0.12 + 0.04 * uniform_unit(rng) : 0.05 + 0.03 * uniform_unit(rng);
        carrier.components.push_back(synthetic::Rankine{c, spec.core_radius, omega});
        today.push_back({{}, c, pixel_to_geo(storm_domain, c.x, c.y), omega, storm});
      }
      write_frames(synthetic::render_sequence(splitmix64(spec.seed + static_cast<std::uint64_t>(day)), carrier,
                                              spec.frames, t0, spacing),
                   dir);
      for (const auto& v : today) {
        if (v.storm) {
          const double dlat = (uniform_unit(rng) - 0.5) * 0.6, dlon = (uniform_unit(rng) - 0.5) * 0.6;
          const TimePoint when = t0 + spacing + std::chrono::minutes{60};
          storms.push_back(format_utc(when) + "," + fmt(v.center_geo.lat + dlat) + "," +
                           fmt(v.center_geo.lon + dlon) + ",tornado");
        }
        for (std::size_t k = 1; k < spec.frames; ++k) {
          TruthVortex t = v;
          t.t_next = t0 + spacing * static_cast<long>(k);
          truth.push_back(t);
        }
      }
    }
  }

  {
    std::ofstream out(dir / "storms.csv", std::ios::trunc);
    out << "time,lat,lon,kind\n";
    for (const auto& s : storms) out << s << '\n';
  }
  {
    std::ofstream out(dir / "truth.csv", std::ios::trunc);
    out << "timestamp,x,y,lon,lat,omega,storm\n";
    for (const auto& t : truth) {
      out << format_utc(t.t_next) << ',' << fmt(t.center.x) << ',' << fmt(t.center.y) << ',' << fmt(t.center_geo.lon)
          << ',' << fmt(t.center_geo.lat) << ',' << fmt(t.omega) << ',' << (t.storm ? 1 : 0) << '\n';
    }
  }

  nlohmann::ordered_json cfg;
  cfg["inputs"] = {{"ch3_dir", "ch3"},
                   {"ch4_dir", "ch4"},
                   {"storm_csv", "storms.csv"},
                   {"coverage_years", {spec.year}},
                   {"spacing_minutes", 30}};
  cfg["output_dir"] = "out";
  cfg["seed"] = spec.seed;
  cfg["forest"] = {{"n_trees", 50}, {"min_leaf", 2}};
  cfg["cross_validation"] = {{"folds", 5}, {"ablation", true}};
  cfg["train"] = {{"days", {1, 10}}};
  cfg["test"] = {{"days", {18, 22}}};
  std::ofstream out(dir / "config.json", std::ios::trunc);
  if (!out) throw Error("cannot write dataset config in '" + dir.string() + "'");
  out << cfg.dump(2) << '\n';
  return truth;
}

}  // namespace stormflow::app
