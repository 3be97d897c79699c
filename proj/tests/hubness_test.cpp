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

#include "hubless/hubness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "hubless/kernels.hpp"
#include "test_util.hpp"

namespace hubless {
namespace {

using testing::ExpectError;
using testing::RandomMatrix;

// Full sort of every prototype per query; stable, so equal keys keep index
// order.
Vector OracleCounts(const Matrix& q, const Matrix& p, std::size_t j, Metric metric) {
  Vector counts(p.rows(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t k = 0; k < p.rows(); ++k) {
      const double key = metric == Metric::kCosine ? -Cosine(q.row(i), p.row(k))
                                                   : L2DistanceSq(q.row(i), p.row(k));
      keyed.emplace_back(key, k);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t r = 0; r < j; ++r) counts[keyed[r].second] += 1;
  }
  return counts;
}

// Small integer coordinates make exact distance ties common.
Matrix IntegerMatrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = static_cast<double>(rng.Below(5)) - 2.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (Norm(m.row(r)) == 0.0) m(r, 0) = 1.0;
  }
  return m;
}

TEST(OccurrenceTest, MatchesFullSortOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + rng.Below(6);
    const std::size_t n_protos = 1 + rng.Below(12);
    const std::size_t n_queries = 1 + rng.Below(60);
    const std::size_t j = 1 + rng.Below(n_protos);
    const bool ties = trial % 2 == 0;
    Matrix q = ties ? IntegerMatrix(rng, n_queries, dim) : RandomMatrix(rng, n_queries, dim);
    Matrix p = ties ? IntegerMatrix(rng, n_protos, dim) : RandomMatrix(rng, n_protos, dim);
    for (Metric metric : {Metric::kCosine, Metric::kL2}) {
      const OccurrenceDistribution got = ComputeOccurrence(q, p, j, metric);
      EXPECT_EQ(got.counts, OracleCounts(q, p, j, metric)) << "trial " << trial;
      EXPECT_EQ(std::accumulate(got.counts.begin(), got.counts.end(), 0.0),
                static_cast<double>(j * n_queries));
      EXPECT_EQ(got.n_queries, n_queries);
    }
  }
}

TEST(OccurrenceTest, SelfMatchAndMaximalHub) {
  Rng rng(2);
  const Matrix p = RandomMatrix(rng, 6, 5);
  const OccurrenceDistribution self = ComputeOccurrence(p, p, 1, Metric::kCosine);
  EXPECT_EQ(self.counts, Vector(6, 1.0));

  Matrix q(9, 5, 0.0);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t k = 0; k < 5; ++k) q(i, k) = p(0, k) * (1.0 + i);
  const OccurrenceDistribution hub = ComputeOccurrence(q, p, 1, Metric::kCosine);
  EXPECT_EQ(hub.counts[0], 9.0);
}

TEST(OccurrenceTest, NeighborOrderAndLimits) {
  const Matrix p(3, 1, {0.0, 5.0, 2.0});
  const Vector query{1.9};
  EXPECT_EQ(NearestPrototypes(query, p, 3, Metric::kL2), (std::vector<std::size_t>{2, 0, 1}));
  ExpectError(ErrorCode::kConfigError, [&] { ComputeOccurrence(p, p, 4, Metric::kL2); });
  ExpectError(ErrorCode::kConfigError, [&] { ComputeOccurrence(p, p, 0, Metric::kL2); });
  ExpectError(ErrorCode::kConfigError, [] { ParseMetric("manhattan"); });
  EXPECT_EQ(ParseMetric("l2"), Metric::kL2);
}

TEST(HubnessReportTest, UniformHasNullSkewness) {
  Rng rng(3);
  const Matrix p = RandomMatrix(rng, 4, 3);
  const HubnessReport r = ComputeHubnessReport(p, p, 1, Metric::kCosine);
  EXPECT_FALSE(r.skewness.has_value());
  EXPECT_EQ(r.skewness_null_reason, "ZeroVariance");
  const nlohmann::json j = ToJson(r);
  EXPECT_TRUE(j.at("skewness").is_null());
  EXPECT_EQ(j.at("skewness_null_reason"), "ZeroVariance");
}

TEST(HubnessReportTest, SingleHub) {
  // 16 queries all nearest to prototype 0 of 4.
  Matrix p(4, 2, {1, 0, 0, 1, -1, 0, 0, -1});
  Matrix q(16, 2);
  for (std::size_t i = 0; i < 16; ++i) q(i, 0) = 1.0, q(i, 1) = 0.01 * i;
  const HubnessReport r = ComputeHubnessReport(q, p, 1, Metric::kCosine);
  EXPECT_EQ(r.distribution.counts, (Vector{16, 0, 0, 0}));
  ASSERT_TRUE(r.skewness.has_value());
  EXPECT_NEAR(*r.skewness, 1.154700538379252, 1e-9);
  ASSERT_FALSE(r.top_hubs.empty());
  EXPECT_EQ(r.top_hubs[0], (std::pair<std::size_t, double>{0, 16.0}));
  const nlohmann::json j = ToJson(r, {"a", "b", "c", "d"});
  EXPECT_EQ(j.at("top_hubs").at(0).at("name"), "a");
  EXPECT_EQ(j.at("metric"), "cosine");
  EXPECT_EQ(j.at("j"), 1);
}

TEST(HubnessReportTest, TopHubsSortedStably) {
  Matrix p(3, 1, {1.0, 2.0, 3.0});
  Matrix q(5, 1, {1.0, 1.1, 2.0, 3.0, 3.1});
  const HubnessReport r = ComputeHubnessReport(q, p, 1, Metric::kL2, 2);
  ASSERT_EQ(r.top_hubs.size(), 2u);
  EXPECT_EQ(r.top_hubs[0].first, 0u);
  EXPECT_EQ(r.top_hubs[1].first, 2u);
}

TEST(HubnessReportTest, CosineSkewnessIsScaleInvariant) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix q = RandomMatrix(rng, 40, 6), p = RandomMatrix(rng, 7, 6);
    Matrix q2 = q, p2 = p;
    for (double& x : q2.values()) x *= 3.5;
    for (double& x : p2.values()) x *= 0.02;
    const HubnessReport a = ComputeHubnessReport(q, p, 2, Metric::kCosine);
    const HubnessReport b = ComputeHubnessReport(q2, p2, 2, Metric::kCosine);
    EXPECT_EQ(a.distribution.counts, b.distribution.counts);
    EXPECT_EQ(a.skewness.has_value(), b.skewness.has_value());
    if (a.skewness) {
      EXPECT_NEAR(*a.skewness, *b.skewness, 1e-12);
    }
  }
}

}  // namespace
}  // namespace hubless
