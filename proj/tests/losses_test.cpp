/* Copyright 2026 The Hubless Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hubless/losses.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hubless/kernels.hpp"
#include "hubless/projector.hpp"
#include "test_util.hpp"

namespace hubless {
namespace {

using testing::ExpectError;
using testing::RandomMatrix;

BatchHistogram Hist(Vector counts) {
  BatchHistogram h;
  h.total = std::accumulate(counts.begin(), counts.end(), 0.0);
  h.counts = std::move(counts);
  return h;
}

// Literal transcription: average over instances of the cubed deviation of
// the instance's predicted-class count, over N var^1.5.
double SkewLossOracle(const std::vector<std::size_t>& predictions, std::size_t classes) {
  Vector counts(classes, 0.0);
  for (std::size_t p : predictions) counts[p] += 1;
  const double n = static_cast<double>(predictions.size());
  const double mean = n / classes;
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= classes;
  double sum = 0.0;
  for (std::size_t p : predictions) sum += std::pow(counts[p] - mean, 3);
  return sum / (n * std::pow(var, 1.5));
}

TEST(SkewnessLossTest, InstanceSumExample) {
  // counts [10,2,2,2]: (10*216 - 6*8) / (16 * 12^1.5)
  const SkewnessLoss l = ComputeSkewnessLoss(Hist({10, 2, 2, 2}));
  EXPECT_NEAR(l.loss, 3.175426480542942, 1e-9);
  std::vector<std::size_t> preds(10, 0);
  for (std::size_t c = 1; c < 4; ++c) preds.insert(preds.end(), 2, c);
  EXPECT_NEAR(l.loss, SkewLossOracle(preds, 4), 1e-12);
}

TEST(SkewnessLossTest, DiffersFromOccurrenceSkewness) {
  // The class-sum form is the occurrence skewness; the training form is not.
  const Vector counts{10, 2, 2, 2};
  const double metric = SkewnessOfCounts(counts);
  const double by_class = ComputeSkewnessLoss(Hist(counts), SkewSum::kClasses).loss;
  const double by_instance = ComputeSkewnessLoss(Hist(counts)).loss;
  EXPECT_NEAR(by_class, metric, 1e-12);
  EXPECT_NEAR(metric, 1.154700538379252, 1e-9);
  EXPECT_GT(std::abs(by_instance - metric), 1.0);
}

TEST(SkewnessLossTest, SignFollowsTheHeavyTail) {
  // One starved class: every other class sits just above the mean.
  EXPECT_LT(ComputeSkewnessLoss(Hist({5, 5, 5, 1})).loss, 0.0);
  EXPECT_GT(ComputeSkewnessLoss(Hist({9, 1, 1, 1})).loss, 0.0);
}

TEST(SkewnessLossTest, UniformIsZero) {
  const SkewnessLoss l = ComputeSkewnessLoss(Hist({4, 4, 4, 4}));
  EXPECT_EQ(l.loss, 0.0);
  for (double g : l.gradient) EXPECT_EQ(g, 0.0);
}

TEST(SkewnessLossTest, MatchesOracleOnRandomPredictions) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.Below(10);
    std::vector<std::size_t> preds(4 + rng.Below(60));
    for (auto& p : preds) p = rng.Below(classes);
    const BatchHistogram h = HardHistogram(preds, classes);
    double var = 0.0;
    const double mean = h.total / classes;
    for (double c : h.counts) var += (c - mean) * (c - mean);
    if (var / classes <= kVarianceEpsilon) continue;
    EXPECT_NEAR(ComputeSkewnessLoss(h).loss, SkewLossOracle(preds, classes), 1e-10);
  }
}

TEST(SkewnessLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  for (SkewSum mode : {SkewSum::kInstances, SkewSum::kClasses}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t classes = 2 + rng.Below(8);
      Vector counts(classes);
      for (double& c : counts) c = rng.Uniform(0, 10);
      const BatchHistogram h = Hist(counts);
      const SkewnessLoss l = ComputeSkewnessLoss(h, mode);
      for (std::size_t k = 0; k < classes; ++k) {
        // The count total is held fixed, so perturb one coordinate alone.
        BatchHistogram up = h, down = h;
        up.counts[k] += 1e-6;
        down.counts[k] -= 1e-6;
        const double fd =
            (ComputeSkewnessLoss(up, mode).loss - ComputeSkewnessLoss(down, mode).loss) / 2e-6;
        EXPECT_NEAR(l.gradient[k], fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(SkewnessLossTest, DescentOnSimplexFlattensCounts) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 3 + rng.Below(6);
    Vector counts(classes);
    for (double& c : counts) c = rng.Uniform(0, 1);
    counts[0] += 5.0;  // one dominant class
    BatchHistogram h = Hist(counts);
    const double start = ComputeSkewnessLoss(h).loss;
    auto spread = [&] {
      const auto [lo, hi] = std::minmax_element(h.counts.begin(), h.counts.end());
      return *hi - *lo;
    };
    const double start_spread = spread();
    for (int step = 0; step < 200; ++step) {
      const SkewnessLoss l = ComputeSkewnessLoss(h);
      const double mean_g = std::accumulate(l.gradient.begin(), l.gradient.end(), 0.0) / classes;
      for (std::size_t c = 0; c < classes; ++c) h.counts[c] -= 0.01 * (l.gradient[c] - mean_g);
    }
    EXPECT_LT(ComputeSkewnessLoss(h).loss, start);
    EXPECT_LT(spread(), start_spread);
  }
}

TEST(HistogramTest, HardPredictionTieBreak) {
  const Matrix protos(2, 2, {1, 0, 1, 0});
  const Matrix feats(1, 2, {2, 0});
  EXPECT_EQ(PredictBatchHard(feats, protos), (std::vector<std::size_t>{0}));
  const Matrix sym(1, 2, {1, 1});
  const Matrix axes(2, 2, {1, 0, 0, 1});
  EXPECT_EQ(PredictBatchHard(sym, axes), (std::vector<std::size_t>{0}));
}

TEST(HistogramTest, SoftCountsSumToBatchSize) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.Below(40), p = 2 + rng.Below(10), m = 1 + rng.Below(12);
    const Matrix f = RandomMatrix(rng, n, m), protos = RandomMatrix(rng, p, m);
    const double tau = std::exp(rng.Uniform(-5, 1));
    const BatchHistogram s = SoftHistogram(f, protos, tau);
    EXPECT_NEAR(std::accumulate(s.counts.begin(), s.counts.end(), 0.0), double(n), 1e-9);
    EXPECT_DOUBLE_EQ(s.total, double(n));
    for (double c : s.counts) EXPECT_GE(c, 0.0);
  }
}

TEST(HistogramTest, SoftApproachesHardAtLowTemperature) {
  Rng rng(6);
  int checked = 0;
  while (checked < 50) {
    const Matrix f = RandomMatrix(rng, 16, 6), protos = RandomMatrix(rng, 5, 6);
    // Skip batches whose top-two cosine gap is too small for tau = 1e-3.
    bool clear = true;
    for (std::size_t i = 0; i < f.rows() && clear; ++i) {
      Vector c;
      for (std::size_t k = 0; k < protos.rows(); ++k) c.push_back(Cosine(f.row(i), protos.row(k)));
      std::sort(c.rbegin(), c.rend());
      clear = c[0] - c[1] > 0.03;
    }
    if (!clear) continue;
    ++checked;
    const BatchHistogram hard = HardHistogram(PredictBatchHard(f, protos), 5);
    const BatchHistogram soft = SoftHistogram(f, protos, 1e-3);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(soft.counts[k], hard.counts[k], 1e-3);
  }
}

TEST(DistanceLossTest, PerfectFitLeavesOnlyRegularizer) {
  const std::vector<std::size_t> hidden{4, 4};
  MlpWeights w = InitWeights(3, hidden, 5, 1, false);
  Rng rng(1);
  const Matrix sem = RandomMatrix(rng, 6, 3);
  const Matrix feat = Forward(w, sem);
  const LossAndGradient l = DistanceLoss(feat, sem, w, 0.5);
  EXPECT_NEAR(l.loss, 0.5 * w.WeightSqNorm(), 1e-12);
  ExpectError(ErrorCode::kEmptyBatch, [&] { DistanceLoss(Matrix(0, 5), Matrix(0, 3), w, 0.1); });
}

// Small problem used for gradient checks: d=8, hidden 16x16, m=8, N=8, p=5.
struct Problem {
  MlpWeights w;
  Batch batch;
  TrainConfig cfg;
};

Problem MakeProblem(std::uint64_t seed, Direction dir, bool final_relu) {
  Rng rng(seed);
  Problem p;
  const std::vector<std::size_t> hidden{16, 16};
  p.w = InitWeights(8, hidden, 8, seed, final_relu);
  // Perturb biases away from zero so no unit sits exactly at a kink.
  for (auto& layer : p.w.layers)
    for (double& b : layer.bias) b = 0.1 * rng.Normal();
  p.batch.features = RandomMatrix(rng, 8, 8);
  for (double& x : p.batch.features.values()) x = std::abs(x);
  p.batch.class_semantics = RandomMatrix(rng, 5, 8);
  for (std::size_t i = 0; i < 8; ++i) p.batch.labels.push_back(i < 5 ? i : rng.Below(5));
  p.cfg.lambda = 1e-3;
  p.cfg.tau = 0.5;
  p.cfg.direction = dir;
  p.cfg.final_relu = final_relu;
  p.cfg.hidden = hidden;
  return p;
}

double MaxRelativeError(Problem& p, double alpha, const MlpWeights& analytic) {
  const double h = 1e-5;
  p.cfg.alpha = alpha;
  double worst = 0.0;
  MlpWeights w = p.w;
  auto blocks = w.Blocks();
  auto grads = analytic.Blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      const double saved = blocks[b][i];
      blocks[b][i] = saved + h;
      const double up = ComputeTotalLoss(p.batch, w, p.cfg).total;
      blocks[b][i] = saved - h;
      const double down = ComputeTotalLoss(p.batch, w, p.cfg).total;
      blocks[b][i] = saved;
      const double fd = (up - down) / (2 * h);
      const double a = grads[b][i];
      // Relative error with an absolute floor for coordinates that are zero
      // (dead units) or below finite-difference resolution.
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

class GradientCheck : public ::testing::TestWithParam<std::tuple<Direction, bool>> {};

TEST_P(GradientCheck, DistanceSkewnessAndTotal) {
  const auto [dir, final_relu] = GetParam();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Problem p = MakeProblem(seed, dir, final_relu);
    p.cfg.alpha = 0.0;
    const TotalLoss ls = ComputeTotalLoss(p.batch, p.w, p.cfg);
    EXPECT_LT(MaxRelativeError(p, 0.0, ls.gradient), 1e-4) << "L_S seed " << seed;

    p.cfg.alpha = 0.7;
    const TotalLoss lt = ComputeTotalLoss(p.batch, p.w, p.cfg);
    EXPECT_NE(lt.skewness, 0.0);
    EXPECT_LT(MaxRelativeError(p, 0.7, lt.gradient), 1e-4) << "L_T seed " << seed;

    // L_U alone: difference of alpha = 1 and alpha = 0 objectives.
    p.cfg.alpha = 1.0;
    MlpWeights lu = ComputeTotalLoss(p.batch, p.w, p.cfg).gradient;
    lu.AddScaled(ls.gradient, -1.0);
    Problem q = p;
    const double h = 1e-5;
    double worst = 0.0;
    MlpWeights w = q.w;
    auto blocks = w.Blocks();
    auto grads = lu.Blocks();
    auto skew = [&] { return ComputeTotalLoss(q.batch, w, q.cfg).skewness; };
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t i = 0; i < blocks[b].size(); ++i) {
        const double saved = blocks[b][i];
        blocks[b][i] = saved + h;
        const double up = skew();
        blocks[b][i] = saved - h;
        const double down = skew();
        blocks[b][i] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(grads[b][i] - fd) /
                                    std::max({std::abs(grads[b][i]), std::abs(fd), 1e-6}));
      }
    }
    EXPECT_LT(worst, 1e-4) << "L_U seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Directions, GradientCheck,
    // A final ReLU on the semantic side can zero a query outright, so the
    // reverse direction is only checked without it.
    ::testing::Values(std::tuple{Direction::kSemanticToFeature, true},
                      std::tuple{Direction::kSemanticToFeature, false},
                      std::tuple{Direction::kFeatureToSemantic, false}));

TEST(TotalLossTest, AlphaZeroEqualsDistanceLossBitwise) {
  Problem p = MakeProblem(3, Direction::kSemanticToFeature, true);
  p.cfg.alpha = 0.0;
  const TotalLoss t = ComputeTotalLoss(p.batch, p.w, p.cfg);
  const LossAndGradient d = DistanceLoss(
      p.batch.features, GatherRows(p.batch.class_semantics, p.batch.labels), p.w, p.cfg.lambda);
  EXPECT_EQ(t.total, d.loss);
  EXPECT_EQ(t.distance, d.loss);
  EXPECT_EQ(t.skewness, 0.0);
  EXPECT_TRUE(t.gradient == d.gradient);
}

TEST(TotalLossTest, ComponentsAddUp) {
  Problem p = MakeProblem(4, Direction::kSemanticToFeature, false);
  p.cfg.alpha = 0.7;
  const TotalLoss t = ComputeTotalLoss(p.batch, p.w, p.cfg);
  EXPECT_NEAR(t.total, t.distance + 0.7 * t.skewness, 1e-12);
  EXPECT_DOUBLE_EQ(t.soft.total, 8.0);
  EXPECT_DOUBLE_EQ(t.hard.total, 8.0);
}

TEST(TrainConfigTest, ValidationAndJson) {
  TrainConfig c;
  c.tau = 0.0;
  ExpectError(ErrorCode::kConfigError, [&] { c.Validate(); });
  c = TrainConfig{};
  c.alpha = -1;
  ExpectError(ErrorCode::kConfigError, [&] { c.Validate(); });
  c = TrainConfig{};
  c.alpha = 0.25;
  c.hidden = {7, 9};
  c.direction = Direction::kFeatureToSemantic;
  nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(back.alpha, 0.25);
  EXPECT_EQ(back.hidden, c.hidden);
  EXPECT_EQ(back.direction, Direction::kFeatureToSemantic);
}

}  // namespace
}  // namespace hubless
