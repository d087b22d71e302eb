// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stormflow/climatology.hpp"
#include "stormflow/descriptors.hpp"
#include "stormflow/evaluation.hpp"
#include "stormflow/field_analysis.hpp"
#include "stormflow/forest.hpp"
#include "stormflow/optical_flow.hpp"
#include "stormflow/raster_io.hpp"
#include "stormflow/synthetic.hpp"

using namespace stormflow;
using namespace std::chrono_literals;

namespace {

// Pinned tolerances.
constexpr double kCalculusTol = 1e-10;
constexpr double kCalculusSeconds = 1.0;
constexpr double kDualFormRelTol = 1e-12;
constexpr double kReconstructionTol = 1e-12;
constexpr double kCrossTermRelTol = 1e-6;
constexpr std::size_t kInteriorMargin = 2;
constexpr double kHelmholtzSeconds = 10.0;
constexpr double kDiffusionRelTol = 1e-6;
constexpr double kTranslationEpe = 0.5;
constexpr double kCentroidPx = 1.0;
constexpr double kW7RelTol = 0.10;
constexpr double kDetectionSeconds = 30.0;
constexpr double kSeparableAccuracy = 0.95;
constexpr double kNoiseLow = 0.40;
constexpr double kNoiseHigh = 0.60;

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double interior_max_abs(const Grid<double>& g, std::size_t margin, double offset = 0.0) {
  double m = 0.0;
  for (std::size_t y = margin; y + margin < g.height(); ++y) {
    for (std::size_t x = margin; x + margin < g.width(); ++x) m = std::max(m, std::abs(g(x, y) - offset));
  }
  return m;
}

double max_speed(const FlowField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.u.size(); ++i) m = std::max(m, std::hypot(f.u[i], f.v[i]));
  return m;
}

FlowField analytic(std::size_t n, synthetic::Component c) {
  return synthetic::sample_field({{c}, synthetic::conus_domain(n, n)});
}

Outcome field_calculus() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rot = analytic(256, synthetic::RigidRotation{{128.0, 128.0}, 0.1});
  const double vort = interior_max_abs(vorticity(rot).values, 1, 0.2);
  const double div = interior_max_abs(divergence(rot).values, 1);
  const double q = interior_max_abs(q_criterion(rot).values, 1, 0.01);
  const auto sh = analytic(256, synthetic::Shear{0.3, 128.0});
  const double qs = interior_max_abs(q_criterion(sh).values, 1);
  const double secs = seconds_since(t0);
  o.require(vort <= kCalculusTol, "vorticity error " + num(vort));
  o.require(div <= kCalculusTol, "divergence error " + num(div));
  o.require(q <= kCalculusTol, "rotation Q error " + num(q));
  o.require(qs <= kCalculusTol, "shear Q error " + num(qs));
  o.require(secs < kCalculusSeconds, "took " + num(secs) + " s");
  if (o.pass) o.detail = "max error " + num(std::max({vort, div, q, qs})) + " in " + num(secs) + " s";
  return o;
}

Outcome dual_forms() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto f = synthetic::random_smooth_field(seed, synthetic::conus_domain(64, 64));
    const auto a = q_criterion(f);
    const auto b = q_criterion_vorticity_form(f);
    const double scale = interior_max_abs(a.values, 0);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      worst = std::max(worst, std::abs(a.values[i] - b.values[i]) / scale);
    }
  }
  o.require(worst <= kDualFormRelTol, "relative difference " + num(worst));
  if (o.pass) o.detail = "50 fields, max relative difference " + num(worst);
  return o;
}

Outcome helmholtz() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double recon = 0.0, cross = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto f = synthetic::random_smooth_field(seed, synthetic::conus_domain(256, 256));
    const auto parts = helmholtz_decompose(f);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
      recon = std::max(recon, std::abs(parts.solenoidal.u[i] + parts.irrotational.u[i] - f.u[i]));
      recon = std::max(recon, std::abs(parts.solenoidal.v[i] + parts.irrotational.v[i] - f.v[i]));
    }
    const double scale = max_speed(f);
    cross = std::max(cross, interior_max_abs(divergence(parts.solenoidal).values, kInteriorMargin) / scale);
    cross = std::max(cross, interior_max_abs(vorticity(parts.irrotational).values, kInteriorMargin) / scale);
  }
  const double secs = seconds_since(t0);
  o.require(recon <= kReconstructionTol, "reconstruction error " + num(recon));
  o.require(cross <= kCrossTermRelTol, "cross term " + num(cross) + " x scale");
  o.require(secs < kHelmholtzSeconds, "took " + num(secs) + " s");
  if (o.pass) {
    o.detail = "20 fields, reconstruction " + num(recon) + ", cross terms " + num(cross) + " x scale, " + num(secs) + " s";
  }
  return o;
}

double mode_amplitude(const Grid<double>& g, std::size_t m, std::size_t n) {
  double num_ = 0.0, den = 0.0;
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      const double b = std::cos(kPi * m * (x + 0.5) / g.width()) * std::cos(kPi * n * (y + 0.5) / g.height());
      num_ += g(x, y) * b;
      den += b * b;
    }
  }
  return num_ / den;
}

Outcome diffusion() {
  Outcome o;
  const std::size_t w = 64, h = 48;
  const double nu = 0.3, dt = 1.0;
  const std::pair<std::size_t, std::size_t> modes[] = {{1, 0}, {0, 1}, {2, 3}, {5, 1}, {7, 7},
                                                       {10, 2}, {3, 12}, {16, 8}, {1, 20}, {24, 0}};
  double worst = 0.0;
  for (const auto& [m, n] : modes) {
    FlowField f = FlowField::zeros(synthetic::conus_domain(w, h));
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double b = std::cos(kPi * m * (x + 0.5) / w) * std::cos(kPi * n * (y + 0.5) / h);
        f.u(x, y) = b;
        f.v(x, y) = -0.5 * b;
      }
    }
    const FlowField out = diffuse_fft(f, nu, dt);
    const double kx = kPi * m / w, ky = kPi * n / h;
    const double expected = std::exp(-nu * (kx * kx + ky * ky) * dt);
    worst = std::max(worst, std::abs(mode_amplitude(out.u, m, n) / mode_amplitude(f.u, m, n) / expected - 1.0));
    worst = std::max(worst, std::abs(mode_amplitude(out.v, m, n) / mode_amplitude(f.v, m, n) / expected - 1.0));
  }
  const auto r = synthetic::random_smooth_field(3, synthetic::conus_domain(57, 43));
  const auto same = diffuse_fft(r, 0.0, 1.0);
  o.require(worst <= kDiffusionRelTol, "attenuation error " + num(worst));
  o.require(same.u == r.u && same.v == r.v, "zero viscosity changed the field");
  if (o.pass) o.detail = "10 modes, max relative error " + num(worst) + ", zero viscosity bit-identical";
  return o;
}

Outcome optical_flow() {
  Outcome o;
  const auto pair = synthetic::render_pair(21, {{synthetic::Translation{3.0, 1.0}}, synthetic::conus_domain(128, 128)});
  const FlowField flow = lucas_kanade_dense(pair.prev, pair.next, FlowParams{});
  double sum = 0.0;
  std::size_t n = 0;
  const std::size_t margin = 12;
  for (std::size_t y = margin; y + margin < 128; ++y) {
    for (std::size_t x = margin; x + margin < 128; ++x) {
      sum += std::hypot(flow.u(x, y) - 3.0, flow.v(x, y) - 1.0);
      ++n;
    }
  }
  const double epe = sum / static_cast<double>(n);
  const FlowField still = lucas_kanade_dense(pair.prev, pair.prev, FlowParams{});
  bool zero = true;
  for (std::size_t i = 0; i < still.u.size(); ++i) zero = zero && still.u[i] == 0.0 && still.v[i] == 0.0;
  o.require(epe <= kTranslationEpe, "endpoint error " + num(epe) + " px");
  o.require(zero, "identical frames gave non-zero flow");
  if (o.pass) o.detail = "translation (3,1) endpoint error " + num(epe) + " px, identical frames zero";
  return o;
}

Outcome detection() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const TimePoint start = parse_utc("2008-06-01T12:00:00Z");
  const double omega = 0.1;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const synthetic::AnalyticField carrier{{synthetic::Rankine{{128.0, 128.0}, 10.0, omega}},
                                           synthetic::conus_domain(256, 256)};
    const FrameSequence seq(synthetic::render_sequence(seed, carrier, 2, start), 30min);
    const auto r = batch_extract(seq, nullptr, ExtractConfig{});
    const std::string tag = "seed " + std::to_string(seed);
    if (r.size() != 1 || !r[0].error.empty()) {
      o.require(false, tag + " pair failed");
      continue;
    }
    if (r[0].regions.size() != 1) {
      o.require(false, tag + " found " + std::to_string(r[0].regions.size()) + " regions");
      continue;
    }
    const auto& c = r[0].regions[0].centroid_px;
    const double err = std::hypot(c.x - 128.0, c.y - 128.0);
    const double w7 = r[0].rows[0].descriptor.w[6];
    const double rel = std::abs(w7 - omega * omega) / (omega * omega);
    o.require(err <= kCentroidPx, tag + " centroid error " + num(err) + " px");
    o.require(rel <= kW7RelTol, tag + " w7 " + num(w7));
    per_seed += (per_seed.empty() ? "" : ", ") + tag + ": centroid " + num(err) + " px, w7 " + num(w7);
  }
  const synthetic::AnalyticField shear{{synthetic::Shear{0.02, 128.0}}, synthetic::conus_domain(256, 256)};
  const FrameSequence seq(synthetic::render_sequence(1, shear, 2, start), 30min);
  const auto r = batch_extract(seq, nullptr, ExtractConfig{});
  o.require(r.size() == 1 && r[0].error.empty() && r[0].regions.empty(), "shear pair produced regions");
  const double secs = seconds_since(t0);
  o.require(secs < kDetectionSeconds, "took " + num(secs) + " s");
  if (o.pass) o.detail = per_seed + "; shear 0 regions; " + num(secs) + " s";
  return o;
}

// Linear-scan oracles for the climatology queries.
bool scan_near(const StormDB& db, double lat, double lon, TimePoint t) {
  for (const auto& r : db.reports()) {
    if (std::abs(r.lat - lat) < 3.0 && std::abs(r.lon - lon) < 3.0 && r.start_time >= t - 30min &&
        r.start_time <= t + 2h) {
      return true;
    }
  }
  return false;
}

std::optional<TimePoint> scan_earliest(const StormDB& db, double lat, double lon, TimePoint t) {
  std::optional<TimePoint> best;
  for (const auto& r : db.reports()) {
    if (std::abs(r.lat - lat) < 3.0 && std::abs(r.lon - lon) < 3.0 && r.start_time > t - 2h &&
        (!best || r.start_time < *best)) {
      best = r.start_time;
    }
  }
  return best;
}

bool in_window(TimePoint t, CalendarDay date, const std::set<int>& cover) {
  const std::chrono::year_month_day day{std::chrono::floor<std::chrono::days>(t)};
  for (int y : cover) {
    auto d = date.day();
    if (date.month() == std::chrono::February && d == std::chrono::day{29} && !std::chrono::year{y}.is_leap()) {
      d = std::chrono::day{28};
    }
    const std::chrono::sys_days center{std::chrono::year{y} / date.month() / d};
    const auto diff = (std::chrono::sys_days{day} - center).count();
    if (diff >= -5 && diff <= 5) return true;
  }
  return false;
}

std::vector<std::uint32_t> scan_density(const StormDB& db, CalendarDay date, const DensityGrid& g) {
  std::vector<std::uint32_t> out(g.cols * g.rows, 0);
  for (const auto& r : db.reports()) {
    if (!in_window(r.start_time, date, db.coverage_years())) continue;
    for (std::size_t j = 0; j < g.rows; ++j) {
      for (std::size_t i = 0; i < g.cols; ++i) {
        const double lo = -124.0 + 4.0 * i, top = 52.0 - 4.0 * j;
        const bool in_x = r.lon >= lo && (r.lon < lo + 4.0 || (i + 1 == g.cols && r.lon <= lo + 4.0));
        const bool in_y = r.lat <= top && (r.lat > top - 4.0 || (j + 1 == g.rows && r.lat >= top - 4.0));
        if (in_x && in_y) ++out[j * g.cols + i];
      }
    }
  }
  return out;
}

Outcome climatology_oracles() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lat(20.0, 52.0), lon(-124.0, -60.0);
  std::uniform_int_distribution<int> first_year(1995, 2010), n_years(1, 5), n_reports(1, 300);
  std::uniform_int_distribution<int> month(1, 12), day(1, 28);
  std::uniform_int_distribution<long> second(0, 366L * 86400 - 1);
  std::uniform_int_distribution<int> nudge(-150, 150);
  std::size_t density_bad = 0, label_bad = 0, earliest_bad = 0, positives = 0, earliest_found = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    std::set<int> cover;
    const int y0 = first_year(rng);
    for (int k = n_years(rng); k > 0; --k) cover.insert(y0 + k - 1);
    std::vector<int> ys(cover.begin(), cover.end());
    std::vector<StormReport> reps;
    for (int k = n_reports(rng); k > 0; --k) {
      const int y = ys[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, static_cast<int>(ys.size()) - 1)(rng))];
      const TimePoint base = std::chrono::sys_days{std::chrono::year{y} / 1 / 1};
      reps.push_back({lat(rng), lon(rng), base + std::chrono::seconds{second(rng)}, StormKind::Hail});
    }
    const StormDB db(reps, cover);

    const CalendarDay date{std::chrono::year{ys.front()}, std::chrono::month(month(rng)), std::chrono::day(day(rng))};
    const auto g = build_density_grid(db, date);
    if (g.counts != scan_density(db, date, g)) ++density_bad;

    // Half the queries sit near an existing report so both outcomes occur.
    double la = lat(rng), lo = lon(rng);
    TimePoint t = std::chrono::sys_days{std::chrono::year{ys.front()} / 1 / 1} + std::chrono::seconds{second(rng)};
    if (inst % 2 == 0) {
      const auto& r = db.reports()[static_cast<std::size_t>(inst) % db.size()];
      la = r.lat + 0.1 * nudge(rng) / 5.0;
      lo = r.lon + 0.1 * nudge(rng) / 5.0;
      t = r.start_time + std::chrono::minutes{nudge(rng)};
    }
    VortexRegion v;
    v.centroid_geo = {lo, la};
    v.timestamp = t;
    const bool expect = scan_near(db, la, lo, t);
    const Label got = label_vortex(db, v);
    const Label want = !LabelDomain{}.contains(lo, la) ? Label::Unlabeled
                       : expect                         ? Label::Positive
                                                        : Label::Negative;
    if (got != want || storm_near(db, la, lo, t) != expect) ++label_bad;
    positives += expect;
    const auto earliest = scan_earliest(db, la, lo, t);
    if (earliest_storm_time(db, la, lo, t) != earliest) ++earliest_bad;
    earliest_found += earliest.has_value();
  }

  // Seven reports in one cell over fourteen coverage years.
  std::set<int> fourteen;
  for (int y = 2000; y < 2014; ++y) fourteen.insert(y);
  std::vector<StormReport> seven;
  for (int k = 0; k < 7; ++k) {
    seven.push_back({40.5, -100.5, parse_utc("2005-07-04T06:00:00Z") + std::chrono::days{k - 3}, StormKind::Hail});
  }
  const auto g7 = build_density_grid(StormDB(seven, fourteen), parse_date("2011-07-04"));
  const double rho7 = g7.rho_at(-100.5, 40.5);

  o.require(density_bad == 0, std::to_string(density_bad) + " density mismatches");
  o.require(label_bad == 0, std::to_string(label_bad) + " label mismatches");
  o.require(earliest_bad == 0, std::to_string(earliest_bad) + " earliest-storm mismatches");
  o.require(positives > 0 && positives < 1000, "degenerate label mix");
  o.require(g7.window_days == 154 && rho7 == 7.0 / 154.0, "7-storm density " + num(rho7));
  if (o.pass) {
    o.detail = "1000 instances agree (" + std::to_string(positives) + " positive, " + std::to_string(earliest_found) +
               " with a storm ahead); 7 storms -> 7/154";
  }
  return o;
}

Outcome label_boundaries() {
  Outcome o;
  const TimePoint t = parse_utc("2008-06-01T18:00:00Z");
  const double lat = 35.0, lon = -97.0;
  const double eps = 1e-9;
  auto label = [&](double dlat, double dlon, std::chrono::seconds dt) {
    VortexRegion v;
    v.centroid_geo = {lon, lat};
    v.timestamp = t;
    return label_vortex(StormDB({{lat + dlat, lon + dlon, t + dt, StormKind::Tornado}}, {2008}), v);
  };
  struct Case {
    const char* name;
    Label got;
    Label want;
  };
  const Case cases[] = {
      {"lat 3-eps", label(3.0 - eps, 0.0, 0s), Label::Positive},
      {"lat 3", label(3.0, 0.0, 0s), Label::Negative},
      {"lat 3+eps", label(3.0 + eps, 0.0, 0s), Label::Negative},
      {"lon -(3-eps)", label(0.0, -(3.0 - eps), 0s), Label::Positive},
      {"lon -(3+eps)", label(0.0, -(3.0 + eps), 0s), Label::Negative},
      {"t-30min", label(0.0, 0.0, -30min), Label::Positive},
      {"t-30min-1s", label(0.0, 0.0, -30min - 1s), Label::Negative},
      {"t+2h", label(0.0, 0.0, 2h), Label::Positive},
      {"t+2h+1s", label(0.0, 0.0, 2h + 1s), Label::Negative},
  };
  for (const auto& c : cases) o.require(c.got == c.want, std::string(c.name) + " -> " + std::string(to_string(c.got)));
  if (o.pass) o.detail = std::to_string(std::size(cases)) + " boundary cases exact";
  return o;
}

std::pair<std::vector<FeatureVector>, std::vector<bool>> informative_set(std::initializer_list<std::size_t> informative,
                                                                         std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::vector<FeatureVector> x;
  std::vector<bool> y;
  for (std::size_t i = 0; i < n; ++i) {
    const bool label = i % 2 == 0;
    FeatureVector v;
    for (auto& w : v) w = u(rng);
    for (auto k : informative) v[k] = (label ? 0.7 : 0.3) + noise(rng);
    x.push_back(v);
    y.push_back(label);
  }
  return {x, y};
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome forest() {
  Outcome o;
  ForestConfig cfg;
  cfg.n_trees = 50;

  // Separable: w7 alone decides, with a gap around the cut.
  auto [sx, sy] = informative_set({6}, 300, 11);
  for (std::size_t i = 0; i < sx.size(); ++i) sx[i][6] = sy[i] ? 0.55 + 0.45 * sx[i][0] : 0.45 * sx[i][0];
  const auto sep = cross_validate(sx, sy, 10, cfg);
  const double sep_acc = sep.mean_overall.value_or(0.0);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<FeatureVector> nx(400);
  std::vector<bool> ny;
  for (auto& v : nx) {
    for (auto& w : v) w = u(rng);
    ny.push_back(coin(rng));
  }
  const double noise_acc = cross_validate(nx, ny, 10, cfg).mean_overall.value_or(-1.0);

  const auto dir = std::filesystem::temp_directory_path() / ("stormflow_acceptance_forest_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const Forest a = train_forest(sx, sy, cfg);
  a.save(dir / "a.json");
  train_forest(sx, sy, cfg).save(dir / "b.json");
  auto threaded = cfg;
  threaded.workers = 4;
  train_forest(sx, sy, threaded).save(dir / "c.json");
  const auto bytes = read_bytes(dir / "a.json");
  const bool identical = bytes == read_bytes(dir / "b.json") && bytes == read_bytes(dir / "c.json");

  const Forest loaded = Forest::load(dir / "a.json");
  std::size_t diffs = 0;
  std::uniform_real_distribution<double> wide(-0.5, 1.5);
  for (int i = 0; i < 2000; ++i) {
    FeatureVector x;
    for (auto& w : x) w = wide(rng);
    const auto p = a.predict(x), q = loaded.predict(x);
    diffs += p.label != q.label || p.score != q.score;
  }
  std::filesystem::remove_all(dir);

  o.require(identical, "model files differ between runs");
  o.require(sep_acc >= kSeparableAccuracy, "separable accuracy " + num(sep_acc));
  o.require(noise_acc >= kNoiseLow && noise_acc <= kNoiseHigh, "noise accuracy " + num(noise_acc));
  o.require(diffs == 0, std::to_string(diffs) + " predictions changed after reload");
  if (o.pass) {
    o.detail = "model bytes identical, separable 10-fold " + num(sep_acc) + ", noise " + num(noise_acc) +
               ", 2000 predictions survive reload";
  }
  return o;
}

Outcome ablation() {
  Outcome o;
  ForestConfig cfg;
  cfg.n_trees = 50;
  const auto [px, py] = informative_set({7}, 300, 7);
  const auto prior_case = ablation_run(px, py, 10, cfg);
  const auto [vx, vy] = informative_set({6}, 300, 8);
  const auto visual_case = ablation_run(vx, vy, 10, cfg);
  const double pp = *prior_case.prior.mean_overall, pv = *prior_case.visual.mean_overall;
  const double vp = *visual_case.prior.mean_overall, vv = *visual_case.visual.mean_overall;
  o.require(pp > pv, "w8-informative: prior " + num(pp) + " vs visual " + num(pv));
  o.require(vv > vp, "visual-informative: visual " + num(vv) + " vs prior " + num(vp));
  if (o.pass) {
    o.detail = "w8 informative: prior " + num(pp) + " > visual " + num(pv) + "; w7 informative: visual " + num(vv) +
               " > prior " + num(vp);
  }
  return o;
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::filesystem::path> files_under(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), root);
    if (*rel.begin() == "cache") continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome pipeline_determinism() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / ("stormflow_acceptance_cli_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const std::string data = (dir / "data").string();
  const std::string quiet = " >>'" + (dir / "log.txt").string() + "' 2>&1";
  std::filesystem::create_directories(dir);
  if (run(std::string(STORMFLOW_SYNTH) + " --out '" + data +
          "' --scenario storms --seed 5 --width 128 --height 128 --days 1 2 3 4 5 18 19 20" + quiet) != 0) {
    o.require(false, "synthetic data generation failed");
    return o;
  }
  const std::string cli = std::string("STORMFLOW_LOG_LEVEL=warn ") + STORMFLOW_CLI;
  const std::string cfg = " --config '" + data + "/config.json'";
  const std::vector<std::string> steps = {"extract" + cfg, "train" + cfg, "detect" + cfg + " --date 2008-06-19",
                                          "evaluate" + cfg, "climatology" + cfg + " --date 2008-06-19"};
  for (int round = 0; round < 2; ++round) {
    std::filesystem::remove_all(data + "/out");
    for (const auto& s : steps) {
      if (run(cli + " " + s + quiet) != 0) {
        o.require(false, "run " + std::to_string(round + 1) + " failed: " + s);
        return o;
      }
    }
    std::filesystem::rename(data + "/out", dir / ("run" + std::to_string(round)));
  }
  const auto a = files_under(dir / "run0"), b = files_under(dir / "run1");
  o.require(a == b, "runs wrote different file sets");
  std::size_t text = 0, images = 0;
  for (const auto& rel : a) {
    if (std::find(b.begin(), b.end(), rel) == b.end()) continue;
    const auto pa = dir / "run0" / rel, pb = dir / "run1" / rel;
    const auto ext = rel.extension().string();
    if (ext == ".png") {
      const auto ia = io::read_png_rgb(pa), ib = io::read_png_rgb(pb);
      o.require(ia.width == ib.width && ia.height == ib.height && ia.rgb == ib.rgb, rel.string() + " pixels differ");
      ++images;
    } else if (ext == ".csv" || ext == ".geojson" || ext == ".json") {
      o.require(read_bytes(pa) == read_bytes(pb), rel.string() + " bytes differ");
      ++text;
    }
  }
  bool has_geojson = false, has_descriptors = false;
  for (const auto& rel : a) {
    has_geojson = has_geojson || rel.extension() == ".geojson";
    has_descriptors = has_descriptors || rel.filename() == "descriptors.csv";
  }
  o.require(has_geojson && has_descriptors, "expected outputs missing");
  std::filesystem::remove_all(dir);
  if (o.pass) {
    o.detail = std::to_string(text) + " CSV/JSON/GeoJSON files byte-identical, " + std::to_string(images) +
               " PNGs pixel-identical";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"field calculus exactness", field_calculus},
      {"Q dual-form agreement", dual_forms},
      {"Helmholtz-Hodge decomposition", helmholtz},
      {"spectral diffusion", diffusion},
      {"optical flow", optical_flow},
      {"end-to-end synthetic detection", detection},
      {"climatology oracle equivalence", climatology_oracles},
      {"labeling boundary semantics", label_boundaries},
      {"forest", forest},
      {"ablation direction", ablation},
      {"pipeline determinism", pipeline_determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
