#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "salgrain/error.hpp"
#include "salgrain/eval.hpp"

using namespace salgrain;

namespace {

ScoredSet random_set(std::mt19937_64& rng, std::size_t n, int levels) {
  // levels > 0 quantizes scores to force ties.
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    double v = dist(rng);
    if (levels > 0) v = std::floor(v * levels) / levels;
    s.scores.push_back(v);
    s.labels.push_back(i % 3 == 0 || dist(rng) < 0.3);
  }
  return s;
}

// Confusion-matrix point for the rule score >= threshold.
RocPoint point_at(const ScoredSet& s, double threshold) {
  double tp = 0, fp = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    (s.labels[i] ? pos : neg) += 1;
    if (s.scores[i] >= threshold) (s.labels[i] ? tp : fp) += 1;
  }
  return {fp / neg, tp / pos};
}

}  // namespace

TEST(RocTest, PerfectSeparationPassesThroughTopLeft) {
  const ScoredSet s{{0.1, 0.2, 0.8, 0.9}, {false, false, true, true}};
  const RocCurve c = roc_curve(s);
  EXPECT_NE(std::find(c.points.begin(), c.points.end(), RocPoint{0.0, 1.0}), c.points.end());
  EXPECT_EQ(auc(s), 1.0);
}

TEST(RocTest, AllTiedIsDiagonal) {
  const ScoredSet s{{0.4, 0.4, 0.4, 0.4, 0.4}, {true, false, true, false, false}};
  const RocCurve c = roc_curve(s);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points.front(), (RocPoint{0.0, 0.0}));
  EXPECT_EQ(c.points.back(), (RocPoint{1.0, 1.0}));
  EXPECT_EQ(auc(s), 0.5);
}

TEST(RocTest, MatchesThresholdEnumerationOracle) {
  std::mt19937_64 rng(1);
  for (int levels : {0, 10}) {
    const ScoredSet s = random_set(rng, 50, levels);
    const RocCurve c = roc_curve(s);
    std::vector<double> thresholds = s.scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    ASSERT_EQ(c.points.size(), thresholds.size() + 1);
    EXPECT_EQ(c.points.front(), (RocPoint{0.0, 0.0}));
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      const RocPoint want = point_at(s, thresholds[i]);
      EXPECT_NEAR(c.points[i + 1].fpr, want.fpr, 1e-15);
      EXPECT_NEAR(c.points[i + 1].tpr, want.tpr, 1e-15);
    }
    EXPECT_EQ(c.points.back(), (RocPoint{1.0, 1.0}));
  }
}

TEST(RocTest, DegenerateLabels) {
  try {
    roc_curve({{0.1, 0.2}, {true, true}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateLabels);
  }
  EXPECT_THROW(auc(ScoredSet{{0.1, 0.2}, {false, false}}), Error);
}

TEST(AucTest, MatchesPairwiseOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const ScoredSet s = random_set(rng, 200, trial % 3 == 0 ? 5 : 0);
    EXPECT_NEAR(auc(s), oracle::pairwise_auc(s.scores, s.labels), 1e-12);
  }
}

TEST(AucTest, TransformInvariances) {
  std::mt19937_64 rng(3);
  const ScoredSet s = random_set(rng, 80, 7);
  const double a = auc(s);
  ScoredSet mapped = s, negated = s, flipped = s;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    mapped.scores[i] = std::exp(3.0 * s.scores[i]) + 1.0;
    negated.scores[i] = -s.scores[i];
    flipped.scores[i] = -s.scores[i];
    flipped.labels[i] = !s.labels[i];
  }
  EXPECT_EQ(auc(mapped), a);
  EXPECT_NEAR(auc(negated), 1.0 - a, 1e-15);
  EXPECT_NEAR(auc(flipped), a, 1e-15);
}

TEST(AucTest, CurveIsMonotone) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const RocCurve c = roc_curve(random_set(rng, 40, trial % 2 ? 4 : 0));
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
      EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    }
  }
}

TEST(TprAtTest, ExactAndInterpolated) {
  const RocCurve c{{{0.0, 0.0}, {0.0, 0.5}, {0.5, 0.5}, {1.0, 1.0}}};
  EXPECT_EQ(tpr_at(c, 0.0), 0.5);
  EXPECT_EQ(tpr_at(c, 0.25), 0.5);
  EXPECT_EQ(tpr_at(c, 0.75), 0.75);
  EXPECT_EQ(tpr_at(c, 1.0), 1.0);
}

TEST(SummaryTest, IdenticalRunsHaveZeroSpread) {
  std::mt19937_64 rng(5);
  const ScoredSet s = random_set(rng, 60, 0);
  const std::vector<ScoredSet> runs{s, s, s};
  const EvalReport r = summarize_runs(runs);
  EXPECT_EQ(r.std, 0.0);
  EXPECT_EQ(r.mean, auc(s));
  ASSERT_EQ(r.fpr_grid.size(), 101u);
  EXPECT_EQ(r.fpr_grid.front(), 0.0);
  EXPECT_EQ(r.fpr_grid.back(), 1.0);
  for (double v : r.std_tpr) EXPECT_EQ(v, 0.0);
  const RocCurve c = roc_curve(s);
  for (std::size_t g = 0; g < r.fpr_grid.size(); ++g) EXPECT_EQ(r.mean_tpr[g], tpr_at(c, r.fpr_grid[g]));
}

TEST(SummaryTest, TwoValueArithmetic) {
  const std::vector<double> v{0.8, 0.9};
  EXPECT_NEAR(mean_of(v), 0.85, 1e-15);
  EXPECT_NEAR(population_std(v), 0.05, 1e-15);
}

TEST(SummaryTest, RowCountsFollowRuns) {
  std::mt19937_64 rng(6);
  for (std::size_t n : {3u, 5u}) {
    std::vector<ScoredSet> runs;
    for (std::size_t i = 0; i < n; ++i) runs.push_back(random_set(rng, 40, 0));
    const EvalReport r = summarize_runs(runs, 11);
    EXPECT_EQ(r.per_run_auc.size(), n);
    EXPECT_EQ(r.mean, mean_of(r.per_run_auc));
    EXPECT_EQ(r.fpr_grid.size(), 11u);
  }
  EXPECT_THROW(summarize_runs({}), Error);
}
