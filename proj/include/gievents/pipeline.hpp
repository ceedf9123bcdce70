#pragma once

// Full decode path: temperature -> anatomy argmax -> vote smoothing ->
// pathology gating -> activity decoding -> event composition -> scoring.

#include <string>

#include "gievents/anatomy.hpp"
#include "gievents/decoding.hpp"
#include "gievents/events.hpp"
#include "gievents/gating.hpp"
#include "gievents/label_space.hpp"

namespace gievents {

enum class DecoderKind { hysteresis, viterbi };
enum class Composition { gt_style, per_label };

inline std::string to_string(DecoderKind d) {
  return d == DecoderKind::hysteresis ? "hysteresis" : "viterbi";
}
inline std::string to_string(Composition c) {
  return c == Composition::gt_style ? "gt_style" : "per_label";
}
inline DecoderKind parse_decoder(const std::string& s) {
  if (s == "hysteresis") return DecoderKind::hysteresis;
  if (s == "viterbi") return DecoderKind::viterbi;
  throw Error("unknown decoder '" + s + "' (expected hysteresis or viterbi)");
}
inline Composition parse_composition(const std::string& s) {
  if (s == "gt_style") return Composition::gt_style;
  if (s == "per_label") return Composition::per_label;
  throw Error("unknown composition '" + s + "' (expected gt_style or per_label)");
}

struct PipelineConfig {
  VoteWindow vote{1};
  bool gating = true;
  GatingPrior prior = GatingPrior::permissive();
  DecoderKind decoder = DecoderKind::hysteresis;
  HysteresisConfig hysteresis;
  HmmConfig hmm;
  Composition composition = Composition::gt_style;
};

/// Every intermediate product of one decode, kept for debugging.
struct PipelineTrace {
  ProbabilityStream calibrated;
  AnatomyTrack raw_anatomy;
  AnatomyTrack anatomy;
  ProbabilityStream gated;
  ActivityMatrix activity;
  EventSet events;
};

/// Rescales probabilities as sigmoid(logit(p) / T). T = 1 returns the input
/// unchanged.
inline ProbabilityStream recalibrate(const ProbabilityStream& stream, double temperature,
                                     double eps = kDefaultProbEpsilon) {
  if (temperature == 1.0) return stream;
  ScoreStream scores{stream.video_id, Matrix<double>(stream.probs.rows(), stream.probs.cols())};
  for (std::size_t i = 0; i < stream.probs.data().size(); ++i) {
    scores.scores.data()[i] = logit(stream.probs.data()[i], eps);
  }
  return temperature_scale(scores, temperature);
}

inline PipelineTrace run_pipeline(const ProbabilityStream& stream, const PipelineConfig& cfg,
                                  const LabelSpace& space = LabelSpace::default_space()) {
  require_valid(stream, space);
  PipelineTrace trace;
  trace.calibrated = recalibrate(stream, cfg.hmm.temperature, cfg.hmm.eps);
  trace.raw_anatomy = anatomy_argmax(trace.calibrated);
  trace.anatomy = vote_smooth(trace.raw_anatomy, cfg.vote);
  trace.gated = cfg.gating ? apply_gate(trace.calibrated, trace.anatomy, cfg.prior)
                           : trace.calibrated;

  const auto pathologies = pathology_classes();
  trace.activity = cfg.decoder == DecoderKind::hysteresis
                       ? hysteresis_decode(trace.gated, cfg.hysteresis, pathologies)
                       : viterbi_decode(trace.gated, cfg.hmm, pathologies);
  // Exactly one anatomy is active per frame.
  for (std::size_t t = 0; t < stream.frames(); ++t) {
    trace.activity.active(t, trace.anatomy.labels[t]) = 1;
  }

  const EventSet composed = cfg.composition == Composition::gt_style
                                ? compose_gt_style(trace.activity)
                                : compose_per_label(trace.activity);
  trace.events = event_scores(composed, trace.gated);
  return trace;
}

inline EventSet decode(const ProbabilityStream& stream, const PipelineConfig& cfg,
                       const LabelSpace& space = LabelSpace::default_space()) {
  return run_pipeline(stream, cfg, space).events;
}

/// Logit input: the configured temperature is applied by the sigmoid itself.
inline EventSet decode(const ScoreStream& scores, const PipelineConfig& cfg,
                       const LabelSpace& space = LabelSpace::default_space()) {
  PipelineConfig unit = cfg;
  unit.hmm.temperature = 1.0;
  return run_pipeline(temperature_scale(scores, cfg.hmm.temperature), unit, space).events;
}

}  // namespace gievents
