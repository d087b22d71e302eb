#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "config.hpp"

namespace stormflow::app {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<CalendarDay> date;
  std::optional<std::filesystem::path> model;
};

/// Applies command-line overrides to a loaded config.
void apply_overrides(PipelineConfig& cfg, const RunOptions& opts);

void cmd_extract(const PipelineConfig& cfg, const RunOptions& opts);
void cmd_climatology(const PipelineConfig& cfg, const RunOptions& opts);
void cmd_train(const PipelineConfig& cfg, const RunOptions& opts);
void cmd_detect(const PipelineConfig& cfg, const RunOptions& opts);
void cmd_evaluate(const PipelineConfig& cfg, const RunOptions& opts);

}  // namespace stormflow::app
