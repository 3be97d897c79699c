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

#include "hubless/inference.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "hubless/kernels.hpp"
#include "test_util.hpp"

namespace hubless {
namespace {

using testing::ExpectError;
using testing::RandomMatrix;

TEST(HarmonicMeanTest, PublishedNumbers) {
  EXPECT_NEAR(HarmonicMean(40.1, 22.5), 28.8, 0.05);
  EXPECT_NEAR(HarmonicMean(53.8, 26.2), 35.2, 0.05);
  EXPECT_EQ(HarmonicMean(0.0, 0.0), 0.0);
  EXPECT_EQ(HarmonicMean(0.5, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(HarmonicMean(0.4, 0.4), 0.4);
}

TEST(HarmonicMeanTest, BoundedByArithmeticMean) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double s = rng.Uniform(), u = rng.Uniform();
    const double h = HarmonicMean(s, u);
    EXPECT_LE(h, 0.5 * (s + u) + 1e-15);
    EXPECT_GE(h, std::min(s, u) - 1e-15);
  }
}

TEST(PredictTest, ZslBasics) {
  const Matrix one(1, 3, {1, 2, 3});
  EXPECT_EQ(ZslPredict(Vector{-5, 0, 1}, one), 0u);
  const Matrix protos(3, 2, {1, 0, 0, 1, 1, 1});
  EXPECT_EQ(ZslPredict(Vector{2, 2}, protos), 2u);
  EXPECT_EQ(ZslPredict(Vector{0, 3}, protos), 1u);
  // Tie between 0 and 1 goes to the lower index.
  const Matrix twins(2, 2, {1, 1, 2, 2});
  EXPECT_EQ(ZslPredict(Vector{1, 0}, twins), 0u);
  ExpectError(ErrorCode::kDegenerateVector, [&] { ZslPredict(Vector{0, 0}, protos); });
}

TEST(PredictTest, GzslCalibration) {
  // Seen prototype at cos 0.9, unseen at cos 0.5 to the query.
  const double a = std::acos(0.9), b = std::acos(0.5);
  const Matrix protos(2, 2, {std::cos(a), std::sin(a), std::cos(b), -std::sin(b)});
  const std::vector<bool> mask{true, false};
  const Vector query{1, 0};
  EXPECT_EQ(GzslPredict(query, protos, mask, 0.0), 0u);
  EXPECT_EQ(GzslPredict(query, protos, mask, 0.6), 1u);
  EXPECT_EQ(GzslPredict(query, protos, mask, 2.0), 1u);
  ExpectError(ErrorCode::kConfigError, [&] { GzslPredict(query, protos, mask, NAN); });
}

TEST(PredictTest, BetaZeroIsPlainArgmax) {
  Rng rng(4);
  const Matrix protos = RandomMatrix(rng, 8, 5);
  const std::vector<bool> mask{true, true, false, true, false, false, true, false};
  for (int i = 0; i < 200; ++i) {
    const Vector f = testing::RandomVector(rng, 5);
    EXPECT_EQ(GzslPredict(f, protos, mask, 0.0), ZslPredict(f, protos));
  }
}

TEST(PredictTest, LargeBetaAlwaysPicksUnseen) {
  Rng rng(5);
  const Matrix protos = RandomMatrix(rng, 6, 4);
  const std::vector<bool> mask{true, true, true, true, false, true};
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(GzslPredict(testing::RandomVector(rng, 4), protos, mask, 2.0), 4u);
  }
}

TEST(PredictTest, GzslMonotoneInBeta) {
  // Raising beta can only move a prediction from seen to unseen.
  Rng rng(6);
  const Matrix protos = RandomMatrix(rng, 10, 6);
  std::vector<bool> mask(10);
  for (std::size_t k = 0; k < 10; ++k) mask[k] = k < 6;
  for (int i = 0; i < 200; ++i) {
    const Vector f = testing::RandomVector(rng, 6);
    bool was_unseen = false;
    for (double beta = 0.0; beta <= 2.0; beta += 0.1) {
      const bool unseen = !mask[GzslPredict(f, protos, mask, beta)];
      EXPECT_TRUE(unseen || !was_unseen);
      was_unseen = unseen;
    }
  }
}

struct Fixture {
  MlpWeights w = InitWeights(3, std::vector<std::size_t>{4}, 3, 1);
  ClassPrototypes protos;
  FeatureBank seen, unseen;
};

Fixture Collinear() {
  Fixture f;
  f.protos.names = {"s0", "s1", "u0"};
  f.protos.vectors = Matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  f.protos.seen = {true, true, false};
  f.seen.class_names = {"s0", "s1"};
  f.seen.features = Matrix(3, 3, {1, 0.1, 0, 0.1, 1, 0, 1, 0, 0.9});
  f.seen.labels = {0, 1, 0};
  f.unseen.class_names = {"u0"};
  f.unseen.features = Matrix(2, 3, {0, 0, 1, 0.8, 0, 0.7});
  f.unseen.labels = {0, 0};
  return f;
}

TEST(EvaluateTest, ZslReport) {
  Fixture f = Collinear();
  const EvalReport r = EvaluateZsl(f.unseen, f.protos, f.w, Direction::kSemanticToFeature);
  EXPECT_EQ(r.task, "zsl");
  EXPECT_DOUBLE_EQ(r.top1_unseen, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class_accuracy.at("u0"), 0.5);
  EXPECT_FALSE(r.harmonic_mean.has_value());
  f.unseen.class_names = {"missing"};
  ExpectError(ErrorCode::kManifestMismatch,
              [&] { EvaluateZsl(f.unseen, f.protos, f.w, Direction::kSemanticToFeature); });
}

TEST(EvaluateTest, GzslReportIsSelfConsistent) {
  const Fixture f = Collinear();
  for (double beta : {0.0, 0.2, 0.5}) {
    const EvalReport r =
        EvaluateGzsl(f.seen, f.unseen, f.protos, f.w, Direction::kSemanticToFeature, beta);
    ASSERT_TRUE(r.top1_seen && r.harmonic_mean);
    EXPECT_DOUBLE_EQ(*r.harmonic_mean, HarmonicMean(*r.top1_seen, r.top1_unseen));
    const nlohmann::json j = ToJson(r, {{"beta", beta}});
    EXPECT_DOUBLE_EQ(j.at("harmonic_mean").get<double>(),
                     HarmonicMean(j.at("top1_seen").get<double>(), j.at("top1_unseen").get<double>()));
    EXPECT_EQ(j.at("config_echo").at("beta"), beta);
    std::size_t total = 0;
    for (const auto& row : r.confusion)
      for (std::size_t c : row) total += c;
    EXPECT_EQ(total, f.seen.size() + f.unseen.size());
  }
  const EvalReport r0 = EvaluateGzsl(f.seen, f.unseen, f.protos, f.w, Direction::kSemanticToFeature, 0.0);
  EXPECT_DOUBLE_EQ(*r0.top1_seen, 1.0);
  EXPECT_DOUBLE_EQ(r0.top1_unseen, 0.5);
  const EvalReport r5 = EvaluateGzsl(f.seen, f.unseen, f.protos, f.w, Direction::kSemanticToFeature, 0.5);
  EXPECT_DOUBLE_EQ(r5.top1_unseen, 1.0);
  EXPECT_LT(*r5.top1_seen, 1.0);
}

TEST(EvaluateTest, RandomPrototypesAreAtChance) {
  Rng rng(77);
  const std::size_t q = 10, per_class = 200;
  ClassPrototypes protos;
  protos.vectors = RandomMatrix(rng, q, 16);
  FeatureBank bank;
  bank.features = RandomMatrix(rng, q * per_class, 16);
  for (std::size_t c = 0; c < q; ++c) {
    protos.names.push_back("c" + std::to_string(c));
    protos.seen.push_back(false);
    bank.labels.insert(bank.labels.end(), per_class, c);
  }
  bank.class_names = protos.names;
  const MlpWeights w = InitWeights(16, std::vector<std::size_t>{4}, 16, 1);
  const EvalReport r = EvaluateZsl(bank, protos, w, Direction::kSemanticToFeature);
  // Binomial(2000, 0.1): three standard deviations.
  const double sigma = std::sqrt(0.1 * 0.9 / (q * per_class));
  EXPECT_NEAR(r.top1_unseen, 0.1, 3 * sigma);
}

}  // namespace
}  // namespace hubless
