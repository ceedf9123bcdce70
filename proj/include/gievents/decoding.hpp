#pragma once

// Per-class binary activity decoders: a two-threshold hysteresis machine and
// a two-state HMM decoded with Viterbi in log space.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gievents/label_space.hpp"
#include "gievents/loss.hpp"

namespace gievents {

/// N x 17 binary activity indicators.
struct ActivityMatrix {
  std::string video_id;
  Matrix<std::uint8_t> active;

  std::size_t frames() const { return active.rows(); }
  friend bool operator==(const ActivityMatrix&, const ActivityMatrix&) = default;
};

using ClassSet = std::set<std::size_t>;

inline ClassSet pathology_classes() {
  ClassSet s;
  for (std::size_t c = kNumAnatomy; c < kNumClasses; ++c) s.insert(c);
  return s;
}

inline ClassSet all_classes() {
  ClassSet s;
  for (std::size_t c = 0; c < kNumClasses; ++c) s.insert(c);
  return s;
}

struct HysteresisConfig {
  double t_on = 0.5;
  double t_off = 0.3;
  std::size_t min_len = 1;

  void validate() const {
    if (!(t_on >= 0.0 && t_on <= 1.0 && t_off >= 0.0 && t_off <= 1.0)) {
      throw Error("hysteresis: thresholds must lie in [0, 1]");
    }
    if (t_off > t_on) throw Error("hysteresis: t_off must not exceed t_on");
    if (min_len < 1) throw Error("hysteresis: min_len must be >= 1");
  }
};

struct HmmConfig {
  std::array<double, kNumClasses> stay_prob;
  double temperature = 1.0;
  double eps = kDefaultProbEpsilon;

  HmmConfig() { stay_prob.fill(0.9); }
  explicit HmmConfig(double stay, double temp = 1.0) : temperature(temp) {
    stay_prob.fill(stay);
  }

  void validate() const {
    for (double s : stay_prob) {
      if (!(s > 0.0 && s < 1.0)) throw Error("hmm: stay_prob must lie in (0, 1)");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw Error("hmm: temperature must be positive");
    }
  }
};

namespace detail {

inline void check_classes(const ClassSet& classes, std::size_t cols) {
  for (auto c : classes) {
    if (c >= cols) throw Error("decoder: class index " + std::to_string(c) + " out of range");
  }
}

}  // namespace detail

/// Runs the OFF/ON machine on one probability sequence. Starts OFF, turns
/// ON at p >= t_on, turns OFF at p < t_off, then drops ON runs shorter than
/// min_len.
template <typename Probs>
std::vector<std::uint8_t> hysteresis_sequence(const Probs& probs, const HysteresisConfig& cfg) {
  std::vector<std::uint8_t> on(probs.size(), 0);
  bool state = false;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (!state && probs[t] >= cfg.t_on) {
      state = true;
    } else if (state && probs[t] < cfg.t_off) {
      state = false;
    }
    on[t] = state ? 1 : 0;
  }
  if (cfg.min_len > 1) {
    std::size_t t = 0;
    while (t < on.size()) {
      if (!on[t]) {
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < on.size() && on[end]) ++end;
      if (end - t < cfg.min_len) std::fill(on.begin() + t, on.begin() + end, 0);
      t = end;
    }
  }
  return on;
}

inline ActivityMatrix hysteresis_decode(const ProbabilityStream& stream,
                                        const HysteresisConfig& cfg, const ClassSet& classes) {
  cfg.validate();
  const std::size_t cols = stream.frames() ? stream.probs.cols() : kNumClasses;
  detail::check_classes(classes, cols);
  ActivityMatrix out{stream.video_id, Matrix<std::uint8_t>(stream.frames(), cols, 0)};
  std::vector<double> column(stream.frames());
  for (auto c : classes) {
    for (std::size_t t = 0; t < stream.frames(); ++t) column[t] = stream.probs(t, c);
    const auto on = hysteresis_sequence(column, cfg);
    for (std::size_t t = 0; t < stream.frames(); ++t) out.active(t, c) = on[t];
  }
  return out;
}

/// p = sigmoid(z / T) entrywise.
inline ProbabilityStream temperature_scale(const ScoreStream& scores, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("temperature_scale: temperature must be positive");
  }
  ProbabilityStream out{scores.video_id,
                        Matrix<double>(scores.scores.rows(), scores.scores.cols(), 0.0)};
  auto& dst = out.probs.data();
  const auto& src = scores.scores.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sigmoid(src[i] / temperature);
  return out;
}

/// Inverse sigmoid with the probability clamped away from 0 and 1.
inline double logit(double p, double eps = kDefaultProbEpsilon) {
  p = std::clamp(p, eps, 1.0 - eps);
  return std::log(p) - std::log1p(-p);
}

/// MAP state path of a symmetric two-state chain with uniform prior. Emission
/// for ON is p, for OFF is 1 - p, both clamped by eps. Ties resolve to OFF.
template <typename Probs>
std::vector<std::uint8_t> viterbi_sequence(const Probs& probs, double stay_prob,
                                           double eps = kDefaultProbEpsilon) {
  const std::size_t n = probs.size();
  std::vector<std::uint8_t> path(n, 0);
  if (n == 0) return path;

  const double log_stay = std::log(stay_prob);
  const double log_switch = std::log1p(-stay_prob);
  auto emit = [&](std::size_t t, int state) {
    const double p = std::clamp(static_cast<double>(probs[t]), eps, 1.0 - eps);
    return state ? std::log(p) : std::log1p(-p);
  };

  // back[t][s]: best predecessor of state s at frame t.
  std::vector<std::array<std::uint8_t, 2>> back(n);
  std::array<double, 2> delta{std::log(0.5) + emit(0, 0), std::log(0.5) + emit(0, 1)};
  for (std::size_t t = 1; t < n; ++t) {
    std::array<double, 2> next{};
    for (int s = 0; s < 2; ++s) {
      const double from_off = delta[0] + (s == 0 ? log_stay : log_switch);
      const double from_on = delta[1] + (s == 1 ? log_stay : log_switch);
      const bool take_on = from_on > from_off;
      back[t][s] = take_on ? 1 : 0;
      next[s] = (take_on ? from_on : from_off) + emit(t, s);
    }
    delta = next;
  }
  path[n - 1] = delta[1] > delta[0] ? 1 : 0;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

inline ActivityMatrix viterbi_decode(const ProbabilityStream& stream, const HmmConfig& cfg,
                                     const ClassSet& classes) {
  cfg.validate();
  const std::size_t cols = stream.frames() ? stream.probs.cols() : kNumClasses;
  detail::check_classes(classes, cols);
  ActivityMatrix out{stream.video_id, Matrix<std::uint8_t>(stream.frames(), cols, 0)};
  std::vector<double> column(stream.frames());
  for (auto c : classes) {
    for (std::size_t t = 0; t < stream.frames(); ++t) column[t] = stream.probs(t, c);
    const auto on = viterbi_sequence(column, cfg.stay_prob.at(c), cfg.eps);
    for (std::size_t t = 0; t < stream.frames(); ++t) out.active(t, c) = on[t];
  }
  return out;
}

}  // namespace gievents
