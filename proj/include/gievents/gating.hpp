#pragma once

#include <array>
#include <bitset>
#include <cstddef>

#include "gievents/anatomy.hpp"
#include "gievents/label_space.hpp"

namespace gievents {

/// For each pathology, the anatomies in which it may be reported.
class GatingPrior {
 public:
  using AnatomySet = std::bitset<kNumAnatomy>;

  /// All anatomies allowed everywhere; gating is a no-op.
  static GatingPrior permissive() {
    GatingPrior prior;
    prior.allowed_.fill(AnatomySet{}.set());
    return prior;
  }

  /// Nothing allowed anywhere.
  static GatingPrior empty() { return GatingPrior{}; }

  /// `pathology` is a full class index in [5, 16].
  const AnatomySet& allowed(std::size_t pathology) const {
    return allowed_.at(slot(pathology));
  }

  void set_allowed(std::size_t pathology, AnatomySet anatomies) {
    allowed_.at(slot(pathology)) = anatomies;
  }

  bool allows(std::size_t pathology, std::size_t anatomy) const {
    if (anatomy >= kNumAnatomy) throw Error("anatomy index out of range");
    return allowed(pathology).test(anatomy);
  }

  bool is_permissive() const {
    for (const auto& a : allowed_) {
      if (!a.all()) return false;
    }
    return true;
  }

  friend bool operator==(const GatingPrior&, const GatingPrior&) = default;

 private:
  static std::size_t slot(std::size_t pathology) {
    if (!is_pathology(pathology)) {
      throw Error("not a pathology class index: " + std::to_string(pathology));
    }
    return pathology - kNumAnatomy;
  }

  std::array<AnatomySet, kNumPathology> allowed_{};
};

/// Zeroes pathology probabilities in frames whose anatomy is outside the
/// pathology's allowed set. Anatomy columns are copied unchanged.
inline ProbabilityStream apply_gate(const ProbabilityStream& stream, const AnatomyTrack& track,
                                    const GatingPrior& prior) {
  if (stream.frames() != track.frames()) {
    throw Error("apply_gate: stream has " + std::to_string(stream.frames()) +
                " frames, anatomy track has " + std::to_string(track.frames()));
  }
  ProbabilityStream out = stream;
  if (stream.frames() > 0 && stream.probs.cols() != kNumClasses) {
    throw Error("apply_gate: stream width must be " + std::to_string(kNumClasses));
  }
  for (std::size_t t = 0; t < stream.frames(); ++t) {
    for (std::size_t m = kNumAnatomy; m < kNumClasses; ++m) {
      if (!prior.allows(m, track.labels[t])) out.probs(t, m) = 0.0;
    }
  }
  return out;
}

}  // namespace gievents
