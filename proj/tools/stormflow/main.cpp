#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("stormflow");
  logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e %^%l%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("STORMFLOW_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honor it when asked for.
    if (level != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("ignoring unknown STORMFLOW_LOG_LEVEL '{}'", env);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace stormflow;
  setup_logging();

  CLI::App cli{"Storm vortex detection from satellite image sequences"};
  cli.require_subcommand(1);
  std::string config_path, date_text, model_path;
  std::uint64_t seed = 0;

  auto add = [&](const char* name, const char* help) {
    auto* sub = cli.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Pipeline config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--date", date_text, "UTC day YYYY-MM-DD");
    sub->add_option("--model", model_path, "Model file (default <output_dir>/model.json)");
    return sub;
  };
  auto* extract = add("extract", "Estimate flows and write vortex descriptors");
  auto* climatology = add("climatology", "Write the storm density grid for --date");
  auto* train = add("train", "Train the forest and cross-validate");
  auto* detect = add("detect", "Classify vortices and write GeoJSON and overlays");
  auto* evaluate = add("evaluate", "Score a model on the test split");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    app::RunOptions opts;
    for (auto* sub : {extract, climatology, train, detect, evaluate}) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) opts.seed = seed;
      if (sub->count("--date")) {
        try {
          opts.date = parse_date(date_text);
        } catch (const DataError& e) {
          throw ConfigError(std::string("--date: ") + e.what());
        }
      }
      if (sub->count("--model")) opts.model = std::filesystem::absolute(model_path);
    }
    app::PipelineConfig cfg = app::load_config(config_path);
    app::apply_overrides(cfg, opts);
    std::filesystem::create_directories(cfg.output_dir);

    if (extract->parsed()) app::cmd_extract(cfg, opts);
    if (climatology->parsed()) app::cmd_climatology(cfg, opts);
    if (train->parsed()) app::cmd_train(cfg, opts);
    if (detect->parsed()) app::cmd_detect(cfg, opts);
    if (evaluate->parsed()) app::cmd_evaluate(cfg, opts);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
  return kOk;
}
