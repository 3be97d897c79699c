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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hubless/error.hpp"
#include "hubless/kernels.hpp"
#include "hubless/parallel.hpp"
#include "hubless/simd/dispatch.hpp"

namespace hubless {

std::string_view MetricName(Metric m) { return m == Metric::kCosine ? "cosine" : "l2"; }

Metric ParseMetric(std::string_view name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "l2") return Metric::kL2;
  throw Error(ErrorCode::kConfigError, "unknown metric '" + std::string(name) + "'");
}

namespace {

void CheckSearch(const Matrix& prototypes, std::size_t width, std::size_t j) {
  if (j < 1 || j > prototypes.rows()) {
    throw Error(ErrorCode::kConfigError, "j must be in [1, " +
                                             std::to_string(prototypes.rows()) + "], got " +
                                             std::to_string(j));
  }
  if (width != prototypes.cols()) {
    throw Error(ErrorCode::kDimMismatch, "queries and prototypes differ in width");
  }
}

// Smaller is nearer for both metrics: negated cosine or squared distance.
std::vector<std::size_t> TopJ(std::span<const double> query, const Matrix& prototypes,
                              const Vector& proto_norms, std::size_t j, Metric metric) {
  const auto& k = simd::Active();
  const std::size_t n = prototypes.rows();
  Vector key(n);
  if (metric == Metric::kCosine) {
    const double qn = std::sqrt(k.dot(query.data(), query.data(), query.size()));
    if (!(qn > 0.0)) throw Error(ErrorCode::kDegenerateVector, "zero-norm query");
    for (std::size_t i = 0; i < n; ++i) {
      key[i] = -(k.dot(query.data(), prototypes.row(i).data(), query.size()) / (qn * proto_norms[i]));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      key[i] = k.sq_dist(query.data(), prototypes.row(i).data(), query.size());
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(j), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return key[a] < key[b] || (key[a] == key[b] && a < b);
                    });
  order.resize(j);
  return order;
}

Vector PrototypeNorms(const Matrix& prototypes, Metric metric) {
  Vector norms(prototypes.rows(), 1.0);
  if (metric != Metric::kCosine) return norms;
  for (std::size_t i = 0; i < prototypes.rows(); ++i) {
    norms[i] = Norm(prototypes.row(i));
    if (!(norms[i] > 0.0)) throw Error(ErrorCode::kDegenerateVector, "zero-norm prototype");
  }
  return norms;
}

}  // namespace

std::vector<std::size_t> NearestPrototypes(std::span<const double> query, const Matrix& prototypes,
                                           std::size_t j, Metric metric) {
  CheckSearch(prototypes, query.size(), j);
  return TopJ(query, prototypes, PrototypeNorms(prototypes, metric), j, metric);
}

OccurrenceDistribution ComputeOccurrence(const Matrix& queries, const Matrix& prototypes,
                                         std::size_t j, Metric metric) {
  CheckSearch(prototypes, queries.cols(), j);
  const Vector norms = PrototypeNorms(prototypes, metric);
  std::vector<std::vector<std::size_t>> hits(queries.rows());
  ParallelFor(queries.rows(), [&](std::size_t q) {
    hits[q] = TopJ(queries.row(q), prototypes, norms, j, metric);
  });
  OccurrenceDistribution out;
  out.j = j;
  out.n_queries = queries.rows();
  out.counts.assign(prototypes.rows(), 0.0);
  for (const auto& list : hits) {
    for (std::size_t p : list) out.counts[p] += 1.0;
  }
  return out;
}

HubnessReport ComputeHubnessReport(const Matrix& queries, const Matrix& prototypes, std::size_t j,
                                   Metric metric, std::size_t max_hubs) {
  HubnessReport r;
  r.metric = metric;
  r.distribution = ComputeOccurrence(queries, prototypes, j, metric);
  try {
    r.skewness = SkewnessOfCounts(r.distribution.counts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroVariance) throw;
    r.skewness_null_reason = "ZeroVariance";
  }
  std::vector<std::size_t> order(r.distribution.counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& c = r.distribution.counts;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] > c[b]; });
  for (std::size_t i = 0; i < order.size() && i < max_hubs; ++i) {
    r.top_hubs.emplace_back(order[i], c[order[i]]);
  }
  return r;
}

nlohmann::json ToJson(const HubnessReport& report, const std::vector<std::string>& prototype_names) {
  nlohmann::json hubs = nlohmann::json::array();
  for (const auto& [index, count] : report.top_hubs) {
    nlohmann::json h = {{"prototype", index}, {"count", count}};
    if (index < prototype_names.size()) h["name"] = prototype_names[index];
    hubs.push_back(std::move(h));
  }
  nlohmann::json j = {
      {"j", report.distribution.j},
      {"metric", MetricName(report.metric)},
      {"n_queries", report.distribution.n_queries},
      {"counts", report.distribution.counts},
      {"top_hubs", std::move(hubs)},
  };
  if (report.skewness) {
    j["skewness"] = *report.skewness;
  } else {
    j["skewness"] = nullptr;
    j["skewness_null_reason"] = report.skewness_null_reason;
  }
  return j;
}

}  // namespace hubless
