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

#ifndef HUBLESS_HUBNESS_HPP_
#define HUBLESS_HUBNESS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubless/tensor.hpp"

namespace hubless {

enum class Metric { kCosine, kL2 };

std::string_view MetricName(Metric m);
Metric ParseMetric(std::string_view name);

// counts[i] = number of queries whose top-j neighbor list contains
// prototype i.
struct OccurrenceDistribution {
  Vector counts;
  std::size_t j = 1;
  std::size_t n_queries = 0;
};

struct HubnessReport {
  OccurrenceDistribution distribution;
  Metric metric = Metric::kCosine;
  // Empty when the counts have no variance; the reason is then set.
  std::optional<double> skewness;
  std::string skewness_null_reason;
  // (prototype index, count), most frequent first.
  std::vector<std::pair<std::size_t, double>> top_hubs;
};

// Exact top-j search of every query over all prototypes; ties go to the
// lower prototype index. Throws kConfigError unless 1 <= j <= prototypes.
OccurrenceDistribution ComputeOccurrence(const Matrix& queries, const Matrix& prototypes,
                                         std::size_t j, Metric metric);

// Indices of the top-j prototypes for one query, best first.
std::vector<std::size_t> NearestPrototypes(std::span<const double> query, const Matrix& prototypes,
                                           std::size_t j, Metric metric);

HubnessReport ComputeHubnessReport(const Matrix& queries, const Matrix& prototypes, std::size_t j,
                                   Metric metric, std::size_t max_hubs = 10);

// {j, metric, counts, skewness, top_hubs}. Names, when given, label the
// prototypes in top_hubs.
nlohmann::json ToJson(const HubnessReport& report,
                      const std::vector<std::string>& prototype_names = {});

}  // namespace hubless

#endif  // HUBLESS_HUBNESS_HPP_
