#include "frames.hpp"

#include <algorithm>
#include <cstdlib>

namespace stormflow::app {

std::vector<FrameFile> discover_frames(const std::filesystem::path& dir, Channel expected) {
  std::vector<FrameFile> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".png" && ext != ".f32") continue;
    FrameFile f;
    f.image = entry.path();
    f.meta = std::filesystem::path(entry.path()).replace_extension(".json");
    if (!std::filesystem::is_regular_file(f.meta)) {
      throw DataError("frame '" + f.image.string() + "' has no sidecar '" + f.meta.string() + "'");
    }
    const FrameMetadata m = read_metadata(f.meta);
    if (m.channel != expected) {
      throw DataError("frame '" + f.image.string() + "' is " + std::string(to_string(m.channel)) + ", expected " +
                      std::string(to_string(expected)));
    }
    f.timestamp = m.timestamp;
    out.push_back(std::move(f));
  }
  if (ec) throw DataError("cannot list '" + dir.string() + "': " + ec.message());
  std::sort(out.begin(), out.end(), [](const FrameFile& a, const FrameFile& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.image < b.image;
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].timestamp == out[i - 1].timestamp) {
      throw DataError("frames '" + out[i - 1].image.string() + "' and '" + out[i].image.string() +
                      "' share timestamp " + format_utc(out[i].timestamp));
    }
  }
  return out;
}

std::vector<PairFiles> pair_channels(const std::vector<FrameFile>& ch3, const std::vector<FrameFile>& ch4,
                                     std::chrono::seconds max_skew) {
  std::vector<PairFiles> out;
  std::vector<bool> used(ch3.size(), false);
  for (const auto& f4 : ch4) {
    // ch3 is sorted, so the nearest candidate is next to the insertion point.
    const auto it = std::lower_bound(ch3.begin(), ch3.end(), f4.timestamp,
                                     [](const FrameFile& f, TimePoint t) { return f.timestamp < t; });
    std::ptrdiff_t best = -1;
    std::chrono::seconds best_gap{};
    for (auto cand : {it - 1, it}) {
      if (cand < ch3.begin() || cand >= ch3.end()) continue;
      const auto gap = std::chrono::abs(cand->timestamp - f4.timestamp);
      if (gap <= max_skew && (best < 0 || gap < best_gap)) {
        best = cand - ch3.begin();
        best_gap = gap;
      }
    }
    if (best < 0 || used[static_cast<std::size_t>(best)]) {
      throw DataError("no ch3 frame within " + std::to_string(max_skew.count()) + " s of ch4 frame at " +
                      format_utc(f4.timestamp));
    }
    used[static_cast<std::size_t>(best)] = true;
    out.push_back({ch3[static_cast<std::size_t>(best)], f4});
  }
  for (std::size_t i = 0; i < ch3.size(); ++i) {
    if (!used[i]) throw DataError("no ch4 frame matches ch3 frame at " + format_utc(ch3[i].timestamp));
  }
  return out;
}

std::vector<std::vector<PairFiles>> split_runs(const std::vector<PairFiles>& pairs, std::chrono::seconds spacing) {
  std::vector<std::vector<PairFiles>> runs;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool joins = i > 0 && [&] {
      const auto gap = pairs[i].timestamp() - pairs[i - 1].timestamp();
      return std::chrono::abs(gap - spacing) * 10 <= spacing;
    }();
    if (!joins) runs.emplace_back();
    runs.back().push_back(pairs[i]);
  }
  return runs;
}

std::vector<std::vector<PairFiles>> select_steps(const std::vector<std::vector<PairFiles>>& runs,
                                                 const std::function<bool(TimePoint)>& keep, std::size_t max_frames) {
  if (max_frames < 2) throw ConfigError("a frame chunk needs room for two frames");
  std::vector<std::vector<PairFiles>> chunks;
  for (const auto& run : runs) {
    std::size_t i = 1;
    while (i < run.size()) {
      if (!keep(run[i].timestamp())) {
        ++i;
        continue;
      }
      std::vector<PairFiles> chunk{run[i - 1]};
      while (i < run.size() && chunk.size() < max_frames && keep(run[i].timestamp())) chunk.push_back(run[i++]);
      chunks.push_back(std::move(chunk));
    }
  }
  return chunks;
}

FrameSequence load_sequence(const std::vector<PairFiles>& files, std::chrono::seconds spacing) {
  std::vector<FramePair> pairs;
  pairs.reserve(files.size());
  for (const auto& f : files) {
    pairs.push_back({load_frame(f.ch3.image, f.ch3.meta), load_frame(f.ch4.image, f.ch4.meta)});
  }
  return FrameSequence(std::move(pairs), spacing);
}

}  // namespace stormflow::app
