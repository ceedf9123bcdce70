#include <gtest/gtest.h>

#include <random>

#include "gievents/evaluation.hpp"
#include "oracles.hpp"

namespace gievents {
namespace {

Event E(std::size_t s, std::size_t e, std::optional<double> score = std::nullopt,
        std::size_t label = 5) {
  return {label, s, e, score};
}

TEST(TemporalIou, Examples) {
  EXPECT_EQ(temporal_iou(E(3, 9), E(3, 9)), 1.0);
  EXPECT_NEAR(temporal_iou(E(0, 4), E(2, 6)), 3.0 / 7.0, 1e-15);
  EXPECT_EQ(temporal_iou(E(0, 4), E(5, 6)), 0.0);
  EXPECT_EQ(temporal_iou(E(0, 0), E(0, 1)), 0.5);
}

TEST(AveragePrecision, Examples) {
  EXPECT_EQ(average_precision({{"v", E(0, 4, 0.9)}}, {{"v", E(0, 4)}}, 0.5), 1.0);
  EXPECT_EQ(average_precision({}, {{"v", E(0, 4)}}, 0.5), 0.0);
  EXPECT_EQ(average_precision({{"v", E(0, 4, 0.9)}, {"v", E(20, 24, 0.4)}},
                              {{"v", E(0, 4)}, {"v", E(10, 14)}}, 0.5),
            0.5);
}

TEST(AveragePrecision, NoGroundTruthIsZero) {
  EXPECT_EQ(average_precision({{"v", E(0, 4, 0.9)}}, {}, 0.5), 0.0);
}

TEST(AveragePrecision, RequiresScores) {
  EXPECT_THROW(average_precision({{"v", E(0, 4)}}, {{"v", E(0, 4)}}, 0.5), Error);
}

TEST(AveragePrecision, MatchesOnlySameVideo) {
  EXPECT_EQ(average_precision({{"a", E(0, 4, 0.9)}}, {{"b", E(0, 4)}}, 0.5), 0.0);
}

TEST(AveragePrecision, LowRankedHitStillCounts) {
  // miss, hit: precision 1/2 at recall 1.
  EXPECT_EQ(average_precision({{"v", E(50, 54, 0.9)}, {"v", E(0, 4, 0.1)}}, {{"v", E(0, 4)}},
                              0.5),
            0.5);
}

TEST(AveragePrecision, DuplicateDetectionIsFalsePositive) {
  EXPECT_EQ(average_precision({{"v", E(0, 4, 0.9)}, {"v", E(0, 4, 0.8)}},
                              {{"v", E(0, 4)}, {"v", E(10, 14)}}, 0.5),
            0.5);
}

TEST(AveragePrecision, ThresholdIsInclusive) {
  // IoU exactly 0.5.
  EXPECT_EQ(average_precision({{"v", E(0, 1, 0.9)}}, {{"v", E(0, 3)}}, 0.5), 1.0);
  EXPECT_EQ(average_precision({{"v", E(0, 1, 0.9)}}, {{"v", E(0, 3)}}, 0.95), 0.0);
}

TEST(AveragePrecision, InvariantUnderMonotoneRescoring) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = oracle::random_event_set(rng, "v", 40);
    const auto g = oracle::random_event_set(rng, "v", 40);
    std::vector<VideoEvent> pv, pv2, gv;
    for (const auto& e : p.events) {
      if (e.label != 0) continue;
      pv.push_back({"v", e});
      auto e2 = e;
      e2.score = std::pow(*e.score, 3.0) * 0.5;
      pv2.push_back({"v", e2});
    }
    for (const auto& e : g.events) {
      if (e.label == 0) gv.push_back({"v", e});
    }
    for (double t : {0.5, 0.95}) {
      const double ap = average_precision(pv, gv, t);
      EXPECT_GE(ap, 0.0);
      EXPECT_LE(ap, 1.0);
      EXPECT_EQ(ap, average_precision(pv2, gv, t));
    }
  }
}

TEST(Evaluate, PerfectPredictions) {
  std::mt19937_64 rng(1);
  auto x = oracle::random_event_set(rng, "v1", 30);
  const auto report = evaluate({x}, {x});
  EXPECT_EQ(report.overall_map, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(report.per_video_map.at("v1"), (std::vector<double>{1.0, 1.0}));
}

TEST(Evaluate, EmptyPredictions) {
  std::mt19937_64 rng(2);
  auto gt = oracle::random_event_set(rng, "v1", 30);
  const auto report = evaluate({EventSet{"v1", {}, 30}}, {gt});
  EXPECT_EQ(report.overall_map, (std::vector<double>{0.0, 0.0}));
}

TEST(Evaluate, Errors) {
  EventSet p{"a", {E(0, 1, 0.5)}, 5};
  EventSet g{"b", {E(0, 1)}, 5};
  EXPECT_THROW(evaluate({p}, {g}), Error);
  EventSet unscored{"b", {E(0, 1)}, 5};
  EXPECT_THROW(evaluate({unscored}, {g}), Error);
  EXPECT_THROW(evaluate({p, p}, {p}), Error);
  EXPECT_THROW(evaluate({p}, {p}, EvalConfig{{0.0}}), Error);
  EXPECT_THROW(evaluate({p}, {p}, EvalConfig{{0.5, 0.5}}), Error);
}

TEST(Evaluate, ClassesWithoutGroundTruthAreExcluded) {
  EventSet g{"v", {E(0, 4, std::nullopt, 5)}, 10};
  EventSet p{"v", {E(0, 4, 0.9, 5), E(6, 8, 0.9, 7)}, 10};
  const auto r = evaluate({p}, {g});
  EXPECT_EQ(r.overall_map[0], 1.0);
  EXPECT_EQ(r.per_class_ap.size(), 1u);
}

// Two videos, three classes, against brute-force pooled AP.
TEST(Evaluate, MatchesBruteForceOnRandomCorpora) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> shift(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EventSet> gts, preds;
    for (const char* vid : {"v1", "v2"}) {
      auto a = oracle::random_activity(rng, 30, 3, 0.3, 0.8);
      a.video_id = vid;
      EventSet g = compose_per_label(a);
      auto b = oracle::random_activity(rng, 30, 3, 0.3, 0.8);
      b.video_id = vid;
      EventSet p = compose_gt_style(b);
      for (auto& e : p.events) e.score = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
      gts.push_back(g);
      preds.push_back(p);
    }
    const auto r = evaluate(preds, gts);
    const auto expect = oracle::brute_force_map(preds, gts, {0.5, 0.95});
    ASSERT_NEAR(r.overall_map[0], expect[0], 1e-12);
    ASSERT_NEAR(r.overall_map[1], expect[1], 1e-12);
    ASSERT_LE(r.overall_map[1], r.overall_map[0]);
    for (const auto& [vid, v] : r.per_video_map) ASSERT_LE(v[1], v[0]);
  }
}

TEST(SegmentCounts, IdenticalSetsMatch) {
  std::mt19937_64 rng(3);
  auto x = oracle::random_event_set(rng, "v", 40);
  const auto r = segment_count_report({x}, {x});
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.predicted, row.ground_truth);
    EXPECT_FALSE(row.flagged);
  }
  EXPECT_EQ(r.total_predicted, x.events.size());
}

TEST(SegmentCounts, GtStyleOutnumbersPerLabel) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::random_activity(rng, 60, kNumClasses);
    const auto r = segment_count_report({compose_per_label(a)}, {compose_gt_style(a)});
    for (const auto& row : r.rows) EXPECT_GE(row.ground_truth, row.predicted);
    EXPECT_GE(r.total_ground_truth, r.total_predicted);
  }
}

TEST(SegmentCounts, EmptyInputs) {
  const auto r = segment_count_report({}, {});
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.total_predicted, 0u);
}

TEST(SegmentCounts, FlagsLargeDisagreement) {
  EventSet p{"v", {E(0, 0, 0.5), E(2, 2, 0.5), E(4, 4, 0.5)}, 5};
  EventSet g{"v", {E(0, 4)}, 5};
  const auto r = segment_count_report({p}, {g}, 2.0);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.rows[0].flagged);
  EXPECT_FALSE(segment_count_report({p}, {g}, 3.0).rows[0].flagged);
}

}  // namespace
}  // namespace gievents
