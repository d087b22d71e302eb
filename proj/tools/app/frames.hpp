#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <vector>

#include "stormflow/geo_imaging.hpp"

namespace stormflow::app {

struct FrameFile {
  std::filesystem::path image;
  std::filesystem::path meta;
  TimePoint timestamp{};
};

struct PairFiles {
  FrameFile ch3;
  FrameFile ch4;
  [[nodiscard]] TimePoint timestamp() const { return ch4.timestamp; }
};

/// Every ".png" or ".f32" image in `dir` with a same-stem ".json" sidecar,
/// sorted by timestamp. Throws DataError on a missing sidecar, a frame of
/// the wrong channel or a repeated timestamp.
std::vector<FrameFile> discover_frames(const std::filesystem::path& dir, Channel expected);

/// Matches each ch4 frame with the nearest ch3 frame no more than
/// `max_skew` away. Any frame left unmatched is a DataError.
std::vector<PairFiles> pair_channels(const std::vector<FrameFile>& ch3, const std::vector<FrameFile>& ch4,
                                     std::chrono::seconds max_skew);

/// Splits the time-ordered pairs wherever a gap departs from `spacing` by
/// more than 10%.
std::vector<std::vector<PairFiles>> split_runs(const std::vector<PairFiles>& pairs, std::chrono::seconds spacing);

/// Frame lists whose every adjacent step ends at a timestamp accepted by
/// `keep`. Each list starts with the frame preceding its first kept step and
/// holds at most `max_frames` frames; consecutive lists share one frame.
std::vector<std::vector<PairFiles>> select_steps(const std::vector<std::vector<PairFiles>>& runs,
                                                 const std::function<bool(TimePoint)>& keep, std::size_t max_frames);

/// Loads both channels of every entry.
FrameSequence load_sequence(const std::vector<PairFiles>& files, std::chrono::seconds spacing);

}  // namespace stormflow::app
