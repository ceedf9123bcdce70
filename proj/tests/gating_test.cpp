#include <gtest/gtest.h>

#include <random>

#include "gievents/gating.hpp"
#include "oracles.hpp"

namespace gievents {
namespace {

constexpr std::size_t kStomach = 2;
constexpr std::size_t kColon = 4;

TEST(ApplyGate, PermissivePriorIsIdentity) {
  std::mt19937_64 rng(1);
  const auto s = oracle::random_stream(rng, 20);
  AnatomyTrack track{"v", std::vector<std::uint8_t>(20)};
  for (std::size_t t = 0; t < 20; ++t) track.labels[t] = t % 5;
  EXPECT_EQ(apply_gate(s, track, GatingPrior::permissive()).probs, s.probs);
}

TEST(ApplyGate, EmptyAllowedSetZeroesColumn) {
  std::mt19937_64 rng(2);
  const auto s = oracle::random_stream(rng, 10);
  AnatomyTrack track{"v", std::vector<std::uint8_t>(10, kColon)};
  auto prior = GatingPrior::permissive();
  prior.set_allowed(9, {});
  const auto out = apply_gate(s, track, prior);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(out.probs(t, 9), 0.0);
    EXPECT_EQ(out.probs(t, 10), s.probs(t, 10));
  }
}

TEST(ApplyGate, StomachOnlyPathology) {
  ProbabilityStream s{"v", Matrix<double>(2, kNumClasses, 0.0)};
  s.probs(0, 6) = 0.8;
  s.probs(1, 6) = 0.9;
  AnatomyTrack track{"v", {kStomach, kColon}};
  auto prior = GatingPrior::permissive();
  prior.set_allowed(6, GatingPrior::AnatomySet{}.set(kStomach));
  const auto out = apply_gate(s, track, prior);
  EXPECT_EQ(out.probs(0, 6), 0.8);
  EXPECT_EQ(out.probs(1, 6), 0.0);
}

TEST(ApplyGate, FrameCountMismatch) {
  ProbabilityStream s{"v", Matrix<double>(3, kNumClasses, 0.5)};
  EXPECT_THROW(apply_gate(s, AnatomyTrack{"v", {0, 0}}, GatingPrior::permissive()), Error);
}

TEST(GatingPrior, RejectsNonPathologyIndex) {
  auto prior = GatingPrior::permissive();
  EXPECT_THROW(prior.allowed(2), Error);
  EXPECT_THROW(prior.set_allowed(17, {}), Error);
}

TEST(ApplyGate, NeverIncreasesKeepsAnatomyAndIsIdempotent) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> anat(0, 4);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = oracle::random_stream(rng, 15);
    AnatomyTrack track{"v", std::vector<std::uint8_t>(15)};
    for (auto& a : track.labels) a = anat(rng);
    GatingPrior prior = GatingPrior::empty();
    for (std::size_t m = 5; m < 17; ++m) {
      GatingPrior::AnatomySet set;
      for (std::size_t a = 0; a < 5; ++a) set[a] = coin(rng);
      prior.set_allowed(m, set);
    }
    const auto once = apply_gate(s, track, prior);
    const auto twice = apply_gate(once, track, prior);
    EXPECT_EQ(once.probs, twice.probs);
    for (std::size_t t = 0; t < 15; ++t) {
      for (std::size_t c = 0; c < 17; ++c) {
        EXPECT_LE(once.probs(t, c), s.probs(t, c));
        if (c < 5) {
          EXPECT_EQ(once.probs(t, c), s.probs(t, c));
        }
      }
    }
  }
}

}  // namespace
}  // namespace gievents
