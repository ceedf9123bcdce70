#pragma once

// Temporal detection metrics: interval IoU, per-class average precision with
// greedy one-to-one matching, and mAP pooled over videos.

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gievents/events.hpp"
#include "gievents/label_space.hpp"

namespace gievents {

struct EvalConfig {
  std::vector<double> iou_thresholds{0.5, 0.95};

  void validate() const {
    if (iou_thresholds.empty()) throw Error("eval: no IoU thresholds");
    std::set<double> seen;
    for (double t : iou_thresholds) {
      if (!(t > 0.0 && t <= 1.0)) throw Error("eval: IoU thresholds must lie in (0, 1]");
      if (!seen.insert(t).second) throw Error("eval: duplicate IoU threshold");
    }
  }
};

/// Intersection over union of two inclusive frame intervals.
inline double temporal_iou(const Event& a, const Event& b) {
  const std::size_t lo = std::max(a.start_frame, b.start_frame);
  const std::size_t hi = std::min(a.end_frame, b.end_frame);
  if (lo > hi) return 0.0;
  const std::size_t inter = hi - lo + 1;
  const std::size_t uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// An event tagged with the video it came from.
struct VideoEvent {
  std::string video_id;
  Event event;
};

/// AP of one class. Predictions are ranked by descending score (ties: earlier
/// start, then lower video id); each takes the unmatched same-video GT with
/// the highest IoU at or above the threshold (ties: earlier GT start). The
/// result is the exact area under the monotone precision envelope. Returns 0
/// when there is no ground truth.
inline double average_precision(const std::vector<VideoEvent>& preds,
                                const std::vector<VideoEvent>& gts, double iou_threshold) {
  for (const auto& p : preds) {
    if (!p.event.score) throw Error("average_precision: prediction without score");
  }
  if (gts.empty()) return 0.0;

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = preds[i];
    const auto& b = preds[j];
    if (*a.event.score != *b.event.score) return *a.event.score > *b.event.score;
    if (a.event.start_frame != b.event.start_frame) {
      return a.event.start_frame < b.event.start_frame;
    }
    return a.video_id < b.video_id;
  });

  std::map<std::string, std::vector<std::size_t>> gt_by_video;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_by_video[gts[g].video_id].push_back(g);
  std::vector<bool> taken(gts.size(), false);

  std::vector<double> precision, recall;
  precision.reserve(preds.size());
  recall.reserve(preds.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& p = preds[order[rank]];
    std::ptrdiff_t best = -1;
    double best_iou = 0.0;
    if (auto it = gt_by_video.find(p.video_id); it != gt_by_video.end()) {
      for (std::size_t g : it->second) {
        if (taken[g] || gts[g].event.label != p.event.label) continue;
        const double iou = temporal_iou(p.event, gts[g].event);
        if (iou < iou_threshold) continue;
        if (best < 0 || iou > best_iou ||
            (iou == best_iou && gts[g].event.start_frame < gts[best].event.start_frame)) {
          best = static_cast<std::ptrdiff_t>(g);
          best_iou = iou;
        }
      }
    }
    if (best >= 0) {
      taken[best] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }

  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return std::clamp(ap, 0.0, 1.0);
}

struct SegmentCountRow {
  std::string video_id;
  std::size_t label = 0;
  std::size_t predicted = 0;
  std::size_t ground_truth = 0;
  bool flagged = false;
};

struct SegmentCountReport {
  std::vector<SegmentCountRow> rows;
  std::map<std::string, std::pair<std::size_t, std::size_t>> video_totals;
  std::size_t total_predicted = 0;
  std::size_t total_ground_truth = 0;
  double flag_factor = 2.0;
};

/// Predicted vs GT event counts per (video, label). A row is flagged when the
/// larger count exceeds `flag_factor` times the smaller one.
inline SegmentCountReport segment_count_report(const std::vector<EventSet>& pred_sets,
                                               const std::vector<EventSet>& gt_sets,
                                               double flag_factor = 2.0) {
  SegmentCountReport report;
  report.flag_factor = flag_factor;
  std::map<std::pair<std::string, std::size_t>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& s : pred_sets) {
    report.video_totals[s.video_id];
    for (const auto& e : s.events) ++counts[{s.video_id, e.label}].first;
  }
  for (const auto& s : gt_sets) {
    report.video_totals[s.video_id];
    for (const auto& e : s.events) ++counts[{s.video_id, e.label}].second;
  }
  for (const auto& [key, c] : counts) {
    const auto lo = std::min(c.first, c.second);
    const auto hi = std::max(c.first, c.second);
    const bool flagged = static_cast<double>(hi) > flag_factor * static_cast<double>(lo);
    report.rows.push_back({key.first, key.second, c.first, c.second, flagged});
    auto& vt = report.video_totals[key.first];
    vt.first += c.first;
    vt.second += c.second;
    report.total_predicted += c.first;
    report.total_ground_truth += c.second;
  }
  return report;
}

struct EvalReport {
  std::vector<double> thresholds;
  /// Only classes with at least one GT event anywhere.
  std::map<std::size_t, std::vector<double>> per_class_ap;
  std::map<std::string, std::vector<double>> per_video_map;
  std::vector<double> overall_map;
  SegmentCountReport diagnostics;
};

namespace detail {

inline std::vector<double> mean_ap(const std::vector<const EventSet*>& preds,
                                   const std::vector<const EventSet*>& gts,
                                   const std::vector<double>& thresholds,
                                   std::map<std::size_t, std::vector<double>>* per_class) {
  std::map<std::size_t, std::vector<VideoEvent>> p_by_class, g_by_class;
  for (const auto* s : preds) {
    for (const auto& e : s->events) p_by_class[e.label].push_back({s->video_id, e});
  }
  for (const auto* s : gts) {
    for (const auto& e : s->events) g_by_class[e.label].push_back({s->video_id, e});
  }
  std::vector<double> sums(thresholds.size(), 0.0);
  for (const auto& [label, g] : g_by_class) {
    std::vector<double> aps;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      aps.push_back(average_precision(p_by_class[label], g, thresholds[k]));
      sums[k] += aps.back();
    }
    if (per_class) (*per_class)[label] = std::move(aps);
  }
  if (!g_by_class.empty()) {
    for (auto& s : sums) s /= static_cast<double>(g_by_class.size());
  }
  return sums;
}

}  // namespace detail

/// Pools predictions over videos per class; mAP averages the classes that
/// have ground truth. Per-video mAP restricts both sides to one video.
inline EvalReport evaluate(const std::vector<EventSet>& pred_sets,
                           const std::vector<EventSet>& gt_sets, const EvalConfig& cfg = {},
                           const LabelSpace& space = LabelSpace::default_space()) {
  cfg.validate();
  std::map<std::string, const EventSet*> pred_by_video, gt_by_video;
  for (const auto& s : pred_sets) {
    if (!pred_by_video.emplace(s.video_id, &s).second) {
      throw Error("evaluate: duplicate prediction video '" + s.video_id + "'");
    }
    for (const auto& e : s.events) {
      if (!e.score) throw Error("evaluate: prediction without score in '" + s.video_id + "'");
      if (e.label >= space.size()) throw Error("evaluate: label index out of range");
    }
  }
  for (const auto& s : gt_sets) {
    if (!gt_by_video.emplace(s.video_id, &s).second) {
      throw Error("evaluate: duplicate ground-truth video '" + s.video_id + "'");
    }
  }
  for (const auto& [vid, _] : pred_by_video) {
    if (!gt_by_video.count(vid)) throw Error("evaluate: no ground truth for video '" + vid + "'");
  }
  for (const auto& [vid, _] : gt_by_video) {
    if (!pred_by_video.count(vid)) throw Error("evaluate: no predictions for video '" + vid + "'");
  }

  EvalReport report;
  report.thresholds = cfg.iou_thresholds;
  std::vector<const EventSet*> all_p, all_g;
  for (const auto& [vid, p] : pred_by_video) {
    all_p.push_back(p);
    all_g.push_back(gt_by_video[vid]);
    report.per_video_map[vid] =
        detail::mean_ap({p}, {gt_by_video[vid]}, cfg.iou_thresholds, nullptr);
  }
  report.overall_map = detail::mean_ap(all_p, all_g, cfg.iou_thresholds, &report.per_class_ap);
  report.diagnostics = segment_count_report(pred_sets, gt_sets);
  return report;
}

/// Human-readable summary table.
inline std::string format_report(const EvalReport& report, const LabelSpace& space) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto header = [&](const std::string& first) {
    os << std::left << std::setw(24) << first;
    for (double t : report.thresholds) {
      std::ostringstream h;
      h << "mAP@" << std::defaultfloat << t;
      os << std::right << std::setw(12) << h.str();
    }
    os << '\n';
  };
  auto row = [&](const std::string& name, const std::vector<double>& v) {
    os << std::left << std::setw(24) << name;
    for (double x : v) os << std::right << std::setw(12) << x;
    os << '\n';
  };
  header("video");
  for (const auto& [vid, v] : report.per_video_map) row(vid, v);
  row("overall", report.overall_map);
  os << '\n';
  header("class AP");
  for (const auto& [cls, v] : report.per_class_ap) row(space.name(cls), v);
  return os.str();
}

inline std::string format_segment_counts(const SegmentCountReport& report,
                                         const LabelSpace& space) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "video" << std::setw(20) << "label" << std::right
     << std::setw(8) << "pred" << std::setw(8) << "gt" << "  flag\n";
  for (const auto& r : report.rows) {
    os << std::left << std::setw(24) << r.video_id << std::setw(20) << space.name(r.label)
       << std::right << std::setw(8) << r.predicted << std::setw(8) << r.ground_truth
       << (r.flagged ? "  *" : "") << '\n';
  }
  for (const auto& [vid, t] : report.video_totals) {
    os << std::left << std::setw(24) << vid << std::setw(20) << "(total)" << std::right
       << std::setw(8) << t.first << std::setw(8) << t.second << '\n';
  }
  os << std::left << std::setw(44) << "all videos" << std::right << std::setw(8)
     << report.total_predicted << std::setw(8) << report.total_ground_truth << '\n';
  return os.str();
}

}  // namespace gievents
