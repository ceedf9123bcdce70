#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gievents/label_space.hpp"

namespace gievents {

/// One anatomy index in [0, 4] per frame.
struct AnatomyTrack {
  std::string video_id;
  std::vector<std::uint8_t> labels;

  std::size_t frames() const { return labels.size(); }
  friend bool operator==(const AnatomyTrack&, const AnatomyTrack&) = default;
};

struct VoteWindow {
  std::size_t radius = 1;
};

/// Per-frame argmax over the anatomy columns; ties go to the lowest index.
inline AnatomyTrack anatomy_argmax(const ProbabilityStream& stream) {
  AnatomyTrack track{stream.video_id, std::vector<std::uint8_t>(stream.frames(), 0)};
  for (std::size_t t = 0; t < stream.frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumAnatomy; ++k) {
      if (stream.probs(t, k) > stream.probs(t, best)) best = k;
    }
    track.labels[t] = static_cast<std::uint8_t>(best);
  }
  return track;
}

/// Majority vote over {t-r, ..., t+r}, truncated at the sequence edges.
/// Among tied counts the frame's own label wins if it is tied, otherwise the
/// lowest tied index.
inline AnatomyTrack vote_smooth(const AnatomyTrack& track, VoteWindow window) {
  const std::size_t n = track.frames();
  AnatomyTrack out{track.video_id, std::vector<std::uint8_t>(n, 0)};
  for (auto a : track.labels) {
    if (a >= kNumAnatomy) throw Error("vote_smooth: anatomy index out of range");
  }
  if (n == 0) return out;

  const std::size_t r = window.radius;
  std::array<std::size_t, kNumAnatomy> counts{};
  // Sliding window [lo, hi).
  std::size_t lo = 0, hi = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t want_lo = t > r ? t - r : 0;
    const std::size_t want_hi = std::min(n, t + r + 1);
    while (hi < want_hi) ++counts[track.labels[hi++]];
    while (lo < want_lo) --counts[track.labels[lo++]];

    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    std::size_t best = track.labels[t];
    if (counts[best] != top) {
      best = static_cast<std::size_t>(std::find(counts.begin(), counts.end(), top) - counts.begin());
    }
    out.labels[t] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace gievents
