#pragma once

// Seeded synthetic videos for oracle and end-to-end testing. Probabilities
// are ground-truth labels corrupted by half-normal noise; optionally, bursts
// of confident pathology predictions are injected where the gating prior
// forbids that pathology.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gievents/decoding.hpp"
#include "gievents/events.hpp"
#include "gievents/gating.hpp"
#include "gievents/label_space.hpp"

namespace gievents {

struct AnatomySegment {
  std::size_t anatomy = 0;
  std::size_t length = 0;
};

struct SyntheticSpec {
  std::string video_id = "synth_000";
  std::size_t frame_count = 0;
  std::vector<AnatomySegment> anatomy_plan;
  /// Per-frame chance that a pathology burst starts, per pathology.
  double burst_rate = 0.004;
  std::size_t burst_min = 10;
  std::size_t burst_max = 60;
  /// Standard deviation of the half-normal label corruption, in [0, 1).
  double noise = 0.0;
  /// Expected fraction of forbidden (frame, pathology) cells covered by
  /// injected false-positive bursts.
  double implausible_rate = 0.0;
  /// True pathologies only occur inside their allowed anatomies; injected
  /// false positives only outside them.
  GatingPrior prior = GatingPrior::permissive();

  /// Five equal anatomy segments in mouth -> colon order.
  static SyntheticSpec standard(std::string video_id, std::size_t frames, double noise,
                                double implausible_rate, GatingPrior prior) {
    SyntheticSpec spec;
    spec.video_id = std::move(video_id);
    spec.frame_count = frames;
    spec.noise = noise;
    spec.implausible_rate = implausible_rate;
    spec.prior = prior;
    std::size_t used = 0;
    for (std::size_t a = 0; a < kNumAnatomy; ++a) {
      const std::size_t len =
          a + 1 == kNumAnatomy ? frames - used : frames / kNumAnatomy;
      spec.anatomy_plan.push_back({a, len});
      used += len;
    }
    return spec;
  }

  void validate() const {
    std::size_t total = 0;
    for (const auto& s : anatomy_plan) {
      if (s.anatomy >= kNumAnatomy) throw Error("synth: anatomy index out of range");
      if (s.length == 0) throw Error("synth: empty anatomy segment");
      total += s.length;
    }
    if (total != frame_count) {
      throw Error("synth: anatomy segments sum to " + std::to_string(total) +
                  " frames, expected " + std::to_string(frame_count));
    }
    if (!(noise >= 0.0 && noise < 1.0)) throw Error("synth: noise must lie in [0, 1)");
    if (!(implausible_rate >= 0.0 && implausible_rate <= 1.0)) {
      throw Error("synth: implausible rate must lie in [0, 1]");
    }
    if (!(burst_rate >= 0.0 && burst_rate <= 1.0)) {
      throw Error("synth: burst rate must lie in [0, 1]");
    }
    if (burst_min == 0 || burst_max < burst_min) throw Error("synth: invalid burst length bounds");
  }
};

/// A restrictive prior for synthetic corpora: pathology j (0-based) may occur
/// in anatomies j mod 5 and (j + 1) mod 5.
inline GatingPrior banded_prior() {
  GatingPrior prior = GatingPrior::empty();
  for (std::size_t j = 0; j < kNumPathology; ++j) {
    GatingPrior::AnatomySet allowed;
    allowed.set(j % kNumAnatomy);
    allowed.set((j + 1) % kNumAnatomy);
    prior.set_allowed(kNumAnatomy + j, allowed);
  }
  return prior;
}

struct SyntheticVideo {
  ProbabilityStream probs;
  LabelMatrix labels;
  EventSet ground_truth;
  /// Cells that received an injected implausible false positive.
  Matrix<std::uint8_t> injected;
  std::vector<std::uint8_t> anatomy;
};

inline SyntheticVideo synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = spec.frame_count;
  std::mt19937_64 rng(seed);

  SyntheticVideo out;
  out.labels = {spec.video_id, Matrix<std::uint8_t>(n, kNumClasses, 0)};
  out.injected = Matrix<std::uint8_t>(n, kNumClasses, 0);
  out.anatomy.reserve(n);
  for (const auto& seg : spec.anatomy_plan) {
    out.anatomy.insert(out.anatomy.end(), seg.length, static_cast<std::uint8_t>(seg.anatomy));
  }
  for (std::size_t t = 0; t < n; ++t) out.labels.labels(t, out.anatomy[t]) = 1;

  std::bernoulli_distribution start_burst(spec.burst_rate);
  std::uniform_int_distribution<std::size_t> burst_len(spec.burst_min, spec.burst_max);
  for (std::size_t m = kNumAnatomy; m < kNumClasses; ++m) {
    std::size_t t = 0;
    while (t < n) {
      if (!spec.prior.allows(m, out.anatomy[t]) || !start_burst(rng)) {
        ++t;
        continue;
      }
      const std::size_t end = std::min(n, t + burst_len(rng));
      for (; t < end && spec.prior.allows(m, out.anatomy[t]); ++t) out.labels.labels(t, m) = 1;
      // One frame gap so consecutive bursts stay separate events.
      ++t;
    }
  }

  out.probs = {spec.video_id, Matrix<double>(n, kNumClasses, 0.0)};
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double e = spec.noise > 0.0 ? std::min(1.0, std::abs(gauss(rng)) * spec.noise) : 0.0;
      out.probs.probs(t, c) = out.labels.labels(t, c) ? 1.0 - e : e;
    }
  }

  if (spec.implausible_rate > 0.0) {
    const double mean_len = 0.5 * static_cast<double>(spec.burst_min + spec.burst_max);
    std::bernoulli_distribution start_fp(std::min(1.0, spec.implausible_rate / mean_len));
    std::uniform_real_distribution<double> fp_level(0.6, 1.0);
    for (std::size_t m = kNumAnatomy; m < kNumClasses; ++m) {
      std::size_t t = 0;
      while (t < n) {
        if (spec.prior.allows(m, out.anatomy[t]) || !start_fp(rng)) {
          ++t;
          continue;
        }
        const std::size_t end = std::min(n, t + burst_len(rng));
        for (; t < end && !spec.prior.allows(m, out.anatomy[t]); ++t) {
          out.probs.probs(t, m) = std::max(out.probs.probs(t, m), fp_level(rng));
          out.injected(t, m) = 1;
        }
      }
    }
  }

  out.ground_truth = compose_gt_style(ActivityMatrix{spec.video_id, out.labels.labels});
  return out;
}

}  // namespace gievents
