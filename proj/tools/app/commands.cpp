#include "commands.hpp"

#include <fstream>
#include <memory>

#include <spdlog/spdlog.h>

#include "frames.hpp"
#include "geojson.hpp"
#include "json.hpp"
#include "render.hpp"
#include "stormflow/climatology.hpp"
#include "stormflow/evaluation.hpp"

namespace stormflow::app {
namespace {

using nlohmann::ordered_json;

class Manifest {
public:
  Manifest(const PipelineConfig& cfg, const char* command, const RunOptions& opts) : cfg_(cfg) {
    j_["command"] = command;
    j_["seed"] = cfg.seed;
    j_["config"] = cfg.source.filename().string();
    if (opts.date) j_["date"] = format_date(*opts.date);
    if (opts.model) j_["model"] = opts.model->filename().string();
    j_["outputs"] = ordered_json::array();
  }

  std::filesystem::path output(const std::filesystem::path& rel) {
    j_["outputs"].push_back(rel.generic_string());
    const auto p = cfg_.output_dir / rel;
    std::filesystem::create_directories(p.parent_path());
    return p;
  }

  ordered_json& info() { return j_; }

  void write(const char* command) const {
    std::ofstream out(cfg_.output_dir / (std::string(command) + ".manifest.json"), std::ios::trunc);
    if (!out) throw Error("cannot write run manifest in '" + cfg_.output_dir.string() + "'");
    out << j_.dump(2) << '\n';
  }

private:
  const PipelineConfig& cfg_;
  ordered_json j_;
};

std::optional<StormDB> load_db(const PipelineConfig& cfg, bool required, const char* why) {
  if (!cfg.storm_csv) {
    if (required) throw ConfigError(std::string("'inputs.storm_csv' is required ") + why);
    return std::nullopt;
  }
  StormDB db = ingest_reports(*cfg.storm_csv, cfg.coverage_years);
  spdlog::info("loaded {} storm reports covering {} year(s)", db.reports().size(), db.coverage_years().size());
  return db;
}

std::unique_ptr<FlowCache> make_cache(const PipelineConfig& cfg) {
  if (!cfg.cache_dir) return nullptr;
  return std::make_unique<DirectoryFlowCache>(*cfg.cache_dir);
}

using ChunkFn = std::function<void(const FrameSequence&, std::vector<PairResult>&)>;

// Streams the selected frame steps through extraction a chunk at a time.
std::size_t run_frames(const PipelineConfig& cfg, const std::function<bool(TimePoint)>& keep, const StormDB* db,
                       bool keep_fields, const ChunkFn& fn) {
  const auto ch3 = discover_frames(cfg.ch3_dir, Channel::Ch3);
  const auto ch4 = discover_frames(cfg.ch4_dir, Channel::Ch4);
  if (ch3.size() < 2 || ch4.size() < 2) {
    throw DataError("need at least two frames per channel, found " + std::to_string(ch3.size()) + " ch3 and " +
                    std::to_string(ch4.size()) + " ch4");
  }
  const auto runs = split_runs(pair_channels(ch3, ch4, cfg.max_channel_skew), cfg.spacing);
  const auto chunks = select_steps(runs, keep, cfg.chunk_frames);
  if (chunks.empty()) throw DataError("no frame pairs match the requested dates");
  spdlog::info("{} frame(s) in {} run(s); {} chunk(s) selected", ch4.size(), runs.size(), chunks.size());

  ExtractConfig ec = cfg.extract;
  ec.keep_fields = keep_fields;
  auto cache = make_cache(cfg);
  std::size_t ok = 0, failed = 0;
  for (const auto& chunk : chunks) {
    const FrameSequence seq = load_sequence(chunk, cfg.spacing);
    auto results = batch_extract(seq, db, ec, cache.get());
    for (const auto& r : results) {
      if (!r.error.empty()) {
        spdlog::warn("pair {} -> {} skipped: {}", format_utc(r.t_prev), format_utc(r.t_next), r.error);
        ++failed;
        continue;
      }
      ++ok;
      std::size_t pos = 0, neg = 0;
      for (const auto& row : r.rows) {
        if (row.label) (*row.label ? pos : neg)++;
      }
      spdlog::info("pair {} -> {}: {} vortices ({} positive, {} negative), flow {}", format_utc(r.t_prev),
                   format_utc(r.t_next), r.rows.size(), pos, neg, r.cache_hit ? "cached" : "computed");
    }
    fn(seq, results);
  }
  if (ok == 0) throw DataError("every frame pair failed (" + std::to_string(failed) + ")");
  return ok;
}

std::function<bool(TimePoint)> day_filter(const RunOptions& opts) {
  if (!opts.date) return [](TimePoint) { return true; };
  const CalendarDay d = *opts.date;
  return [d](TimePoint t) { return utc_day(t) == d; };
}

std::vector<DescriptorRow> rows_for_split(const PipelineConfig& cfg, const SplitConfig& split, const StormDB* db,
                                          Manifest& m, const char* csv_name) {
  if (split.descriptors) {
    auto rows = read_descriptor_csv(*split.descriptors);
    spdlog::info("read {} descriptor rows from {}", rows.size(), split.descriptors->string());
    return rows;
  }
  if (!db) throw ConfigError("'inputs.storm_csv' is required to label extracted vortices");
  const DateWindow w = split.window;
  std::vector<DescriptorRow> rows;
  run_frames(cfg, [w](TimePoint t) { return w.contains(t); }, db, false,
             [&](const FrameSequence&, std::vector<PairResult>& results) {
               for (auto& r : results) {
                 for (auto& row : r.rows) rows.push_back(std::move(row));
               }
             });
  write_descriptor_csv(rows, m.output(csv_name));
  return rows;
}

struct LabeledSet {
  std::vector<VortexDescriptor> descriptors;
  std::vector<FeatureVector> x;
  std::vector<bool> y;
};

LabeledSet labeled_subset(const std::vector<DescriptorRow>& rows, bool balanced, std::uint64_t seed) {
  LabeledSet all;
  for (const auto& r : rows) {
    if (!r.label) continue;
    all.descriptors.push_back(r.descriptor);
    all.x.push_back(r.descriptor.w);
    all.y.push_back(*r.label);
  }
  if (all.y.empty()) throw DataError("no labeled vortices");
  if (!balanced) return all;
  LabeledSet out;
  for (auto i : balanced_indices(all.y, seed)) {
    out.descriptors.push_back(all.descriptors[i]);
    out.x.push_back(all.x[i]);
    out.y.push_back(all.y[i]);
  }
  return out;
}

std::size_t count_true(const std::vector<bool>& v) {
  std::size_t n = 0;
  for (bool b : v) n += b ? 1 : 0;
  return n;
}

std::string ratio_text(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::filesystem::path model_path(const PipelineConfig& cfg, const RunOptions& opts) {
  return opts.model ? *opts.model : cfg.output_dir / "model.json";
}

Forest load_model(const PipelineConfig& cfg, const RunOptions& opts) {
  const auto p = model_path(cfg, opts);
  if (!std::filesystem::is_regular_file(p)) throw ConfigError("model '" + p.string() + "' does not exist");
  Forest f = Forest::load(p);
  spdlog::info("loaded model with {} trees from {}", f.trees().size(), p.string());
  return f;
}

}  // namespace

void apply_overrides(PipelineConfig& cfg, const RunOptions& opts) {
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.forest.seed = *opts.seed;
  }
}

void cmd_extract(const PipelineConfig& cfg, const RunOptions& opts) {
  Manifest m(cfg, "extract", opts);
  const auto db = load_db(cfg, false, "");
  std::vector<DescriptorRow> rows;
  const auto pairs = run_frames(cfg, day_filter(opts), db ? &*db : nullptr, cfg.write_rasters,
                                [&](const FrameSequence&, std::vector<PairResult>& results) {
                                  for (auto& r : results) {
                                    if (cfg.write_rasters && r.error.empty()) {
                                      const auto stem = file_stamp(r.t_next);
                                      const auto dir = cfg.output_dir / "rasters";
                                      save_flow(*r.flow, dir, stem + "_flow");
                                      save_scalar(*r.q, dir, stem + "_q");
                                      m.info()["outputs"].push_back("rasters/" + stem + "_flow");
                                      m.info()["outputs"].push_back("rasters/" + stem + "_q");
                                    }
                                    for (auto& row : r.rows) rows.push_back(std::move(row));
                                  }
                                });
  write_descriptor_csv(rows, m.output("descriptors.csv"));
  m.info()["pairs"] = pairs;
  m.info()["vortices"] = rows.size();
  m.write("extract");
  spdlog::info("wrote {} descriptor rows from {} pair(s)", rows.size(), pairs);
}

void cmd_climatology(const PipelineConfig& cfg, const RunOptions& opts) {
  if (!opts.date) throw ConfigError("climatology needs --date");
  Manifest m(cfg, "climatology", opts);
  const auto db = load_db(cfg, true, "for climatology");
  if (db->coverage_years().empty()) throw DataError("storm report file covers no years");
  const auto grid = build_density_grid(*db, *opts.date, cfg.extract.density_extent, cfg.extract.density_cell_deg);
  write_density_csv(grid, m.output("density_" + format_date(*opts.date) + ".csv"));
  m.info()["window_days"] = grid.window_days;
  m.write("climatology");
  spdlog::info("density grid {}x{} over {} window day(s)", grid.cols, grid.rows, grid.window_days);
}

void cmd_train(const PipelineConfig& cfg, const RunOptions& opts) {
  Manifest m(cfg, "train", opts);
  const auto db = load_db(cfg, !cfg.train.descriptors, "to label training vortices");
  const auto rows = rows_for_split(cfg, cfg.train, db ? &*db : nullptr, m, "train_descriptors.csv");
  const auto set = labeled_subset(rows, cfg.train.balanced, cfg.seed);
  const auto pos = count_true(set.y);
  spdlog::info("training on {} samples ({} positive, {} negative)", set.y.size(), pos, set.y.size() - pos);

  std::vector<std::pair<std::string, CrossValidation>> sets;
  if (cfg.ablation) {
    auto ab = ablation_run(set.x, set.y, cfg.folds, cfg.forest);
    sets = {{"all", std::move(ab.all)}, {"visual", std::move(ab.visual)}, {"prior", std::move(ab.prior)}};
  } else {
    sets = {{"all", cross_validate(set.x, set.y, cfg.folds, cfg.forest)}};
  }
  for (const auto& [name, cv] : sets) {
    spdlog::info("{}-fold {}: overall {} sensitivity {} specificity {}", cfg.folds, name,
                 ratio_text(cv.pooled.overall), ratio_text(cv.pooled.sensitivity), ratio_text(cv.pooled.specificity));
  }
  write_metrics_csv(sets, m.output("cv_metrics.csv"));

  const Forest forest = train_forest(set.x, set.y, cfg.forest);
  const auto path = model_path(cfg, opts);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  forest.save(path);
  m.info()["model_written"] = path.filename().string();
  m.info()["samples"] = set.y.size();
  m.info()["positives"] = pos;
  m.write("train");
  spdlog::info("model saved to {} (out-of-bag accuracy {})", path.string(),
               forest.oob_accuracy() < 0 ? std::string("n/a") : ratio_text(forest.oob_accuracy()));
}

void cmd_detect(const PipelineConfig& cfg, const RunOptions& opts) {
  Manifest m(cfg, "detect", opts);
  const Forest forest = load_model(cfg, opts);
  const auto db = load_db(cfg, false, "");
  if (!db) spdlog::warn("no storm reports configured; w8 is 0 for every vortex");
  std::size_t storms = 0, total = 0;
  const auto pairs = run_frames(
      cfg, day_filter(opts), db ? &*db : nullptr, false, [&](const FrameSequence& seq, std::vector<PairResult>& results) {
        for (std::size_t k = 0; k < results.size(); ++k) {
          const auto& r = results[k];
          if (!r.error.empty()) continue;
          std::vector<DetectedVortex> found;
          for (std::size_t i = 0; i < r.rows.size(); ++i) {
            found.push_back({r.regions[i], r.rows[i].descriptor, forest.predict(r.rows[i].descriptor)});
            storms += found.back().prediction.label ? 1 : 0;
          }
          total += found.size();
          const auto& ch4 = seq.pairs()[k + 1].ch4;
          const auto stem = "detect/" + file_stamp(r.t_next);
          std::ofstream out(m.output(stem + ".geojson"), std::ios::trunc);
          if (!out) throw Error("cannot write detections for " + format_utc(r.t_next));
          out << detections_geojson(found, ch4.transform, r.t_prev, r.t_next, cfg.seed);
          io::write_png_rgb(m.output(stem + ".png"), detection_overlay(ch4, found));
        }
      });
  m.info()["pairs"] = pairs;
  m.info()["vortices"] = total;
  m.info()["storm_vortices"] = storms;
  m.write("detect");
  spdlog::info("{} of {} vortices classified as storms over {} pair(s)", storms, total, pairs);
}

void cmd_evaluate(const PipelineConfig& cfg, const RunOptions& opts) {
  Manifest m(cfg, "evaluate", opts);
  const Forest forest = load_model(cfg, opts);
  const auto db = load_db(cfg, !cfg.test.descriptors, "to label test vortices");
  const auto rows = rows_for_split(cfg, cfg.test, db ? &*db : nullptr, m, "test_descriptors.csv");
  const auto labeled = labeled_subset(rows, false, cfg.seed);
  const auto scored = cfg.test.balanced ? labeled_subset(rows, true, cfg.seed) : labeled;

  std::vector<bool> predicted;
  for (const auto& x : scored.x) predicted.push_back(forest.predict(x).label);
  const Metrics metrics = confusion_metrics(predicted, scored.y);
  write_metrics_csv(metrics, m.output("test_metrics.csv"));
  spdlog::info("test on {} samples: overall {} sensitivity {} specificity {}", scored.y.size(),
               ratio_text(metrics.overall), ratio_text(metrics.sensitivity), ratio_text(metrics.specificity));

  if (db) {
    std::vector<std::pair<VortexDescriptor, bool>> vortices;
    for (const auto& d : labeled.descriptors) vortices.emplace_back(d, forest.predict(d).label);
    const auto curve = lead_time_curve(vortices, *db, cfg.lead_time_edges);
    write_lead_time_csv(curve, m.output("lead_time.csv"));
    io::write_png_rgb(m.output("lead_time.png"), lead_time_chart(curve));
    spdlog::info("lead-time curve: {} vortices with a storm ahead, {} without", curve.with_storm(),
                 curve.without_storm);
  } else {
    spdlog::warn("no storm reports configured; lead-time curve skipped");
  }
  m.info()["samples"] = scored.y.size();
  m.write("evaluate");
}

}  // namespace stormflow::app
