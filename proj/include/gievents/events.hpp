#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gievents/decoding.hpp"
#include "gievents/label_space.hpp"

namespace gievents {

/// A labeled frame interval, inclusive on both ends.
struct Event {
  std::size_t label = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::optional<double> score;

  std::size_t length() const { return end_frame - start_frame + 1; }
  friend bool operator==(const Event&, const Event&) = default;
};

/// Canonical event order: by start frame, then label.
inline bool event_order(const Event& a, const Event& b) {
  return std::tie(a.start_frame, a.label, a.end_frame) <
         std::tie(b.start_frame, b.label, b.end_frame);
}

struct EventSet {
  std::string video_id;
  std::vector<Event> events;
  std::size_t frame_count = 0;

  friend bool operator==(const EventSet&, const EventSet&) = default;
};

/// Returns an empty string when the set is well formed, otherwise the first
/// problem found (prefixed by the event index).
inline std::string check_event_set(const EventSet& set) {
  std::vector<std::optional<std::size_t>> last_end(kNumClasses);
  for (std::size_t i = 0; i < set.events.size(); ++i) {
    const auto& e = set.events[i];
    const std::string at = "event " + std::to_string(i) + ": ";
    if (e.label >= kNumClasses) return at + "label index out of range";
    if (e.start_frame > e.end_frame) {
      return at + "start_frame " + std::to_string(e.start_frame) + " > end_frame " +
             std::to_string(e.end_frame);
    }
    if (e.end_frame >= set.frame_count) {
      return at + "end_frame " + std::to_string(e.end_frame) + " outside frame_count " +
             std::to_string(set.frame_count);
    }
    if (e.score && !(*e.score >= 0.0 && *e.score <= 1.0)) return at + "score outside [0, 1]";
    auto& prev = last_end[e.label];
    if (prev && e.start_frame <= *prev) {
      return at + "overlaps or precedes an earlier event of the same label";
    }
    prev = e.end_frame;
  }
  return {};
}

inline void require_valid(const EventSet& set) {
  if (auto msg = check_event_set(set); !msg.empty()) {
    throw Error("invalid event set '" + set.video_id + "': " + msg);
  }
}

/// GT-style events: the timeline is cut wherever the set of active classes
/// changes, and every class active in a constant-set run gets one event
/// spanning that run. Same-label neighbours are never merged.
inline EventSet compose_gt_style(const ActivityMatrix& activity) {
  const auto& a = activity.active;
  EventSet out{activity.video_id, {}, a.rows()};
  std::size_t run_start = 0;
  auto same_set = [&](std::size_t t, std::size_t u) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if ((a(t, c) != 0) != (a(u, c) != 0)) return false;
    }
    return true;
  };
  for (std::size_t t = 1; t <= a.rows(); ++t) {
    if (t < a.rows() && same_set(t, run_start)) continue;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (a(run_start, c)) out.events.push_back({c, run_start, t - 1, std::nullopt});
    }
    run_start = t;
  }
  return out;
}

/// Baseline composition: one event per maximal run of each class on its own.
inline EventSet compose_per_label(const ActivityMatrix& activity) {
  const auto& a = activity.active;
  EventSet out{activity.video_id, {}, a.rows()};
  for (std::size_t c = 0; c < a.cols(); ++c) {
    std::size_t t = 0;
    while (t < a.rows()) {
      if (!a(t, c)) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end + 1 < a.rows() && a(end + 1, c)) ++end;
      out.events.push_back({c, t, end, std::nullopt});
      t = end + 1;
    }
  }
  std::sort(out.events.begin(), out.events.end(), event_order);
  return out;
}

/// Inverse of composition: marks every frame covered by an event.
inline ActivityMatrix rasterize(const EventSet& set, std::size_t cols = kNumClasses) {
  ActivityMatrix out{set.video_id, Matrix<std::uint8_t>(set.frame_count, cols, 0)};
  for (const auto& e : set.events) {
    if (e.end_frame >= set.frame_count || e.label >= cols || e.start_frame > e.end_frame) {
      throw Error("rasterize: event outside the matrix");
    }
    for (std::size_t t = e.start_frame; t <= e.end_frame; ++t) out.active(t, e.label) = 1;
  }
  return out;
}

/// Scores each event with the mean probability of its label over its span.
inline EventSet event_scores(const EventSet& set, const ProbabilityStream& probs) {
  EventSet out = set;
  for (std::size_t i = 0; i < out.events.size(); ++i) {
    auto& e = out.events[i];
    if (e.start_frame > e.end_frame || e.end_frame >= probs.frames() ||
        e.label >= probs.probs.cols()) {
      throw Error("event_scores: event " + std::to_string(i) + " outside the stream");
    }
    double sum = 0.0;
    for (std::size_t t = e.start_frame; t <= e.end_frame; ++t) sum += probs.probs(t, e.label);
    e.score = sum / static_cast<double>(e.length());
  }
  return out;
}

/// Drops scores and sorts into canonical order, for byte-level comparison of
/// predictions against ground truth.
inline EventSet canonicalize(EventSet set, bool drop_scores = true) {
  if (drop_scores) {
    for (auto& e : set.events) e.score.reset();
  }
  std::stable_sort(set.events.begin(), set.events.end(), event_order);
  return set;
}

}  // namespace gievents
