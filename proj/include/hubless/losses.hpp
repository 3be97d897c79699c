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

#ifndef HUBLESS_LOSSES_HPP_
#define HUBLESS_LOSSES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubless/projector.hpp"
#include "hubless/tensor.hpp"

namespace hubless {

// How the skewness loss sums cubed deviations.
//  kInstances: over the N batch instances, so each class's term is weighted
//              by its count (the training objective).
//  kClasses:   over the p classes, the same normalization as the hubness
//              metric. Kept for ablations.
enum class SkewSum { kInstances, kClasses };

struct TrainConfig {
  double alpha = 0.7;
  double lambda = 1e-4;
  std::size_t batch_size = 64;
  double tau = 0.1;
  double lr = 1e-3;
  std::size_t epochs = 100;
  std::uint64_t seed = 7;
  bool final_relu = true;
  bool normalize_features = false;
  SkewSum skew_sum = SkewSum::kInstances;
  std::vector<std::size_t> hidden = {512, 768};
  Direction direction = Direction::kSemanticToFeature;

  // Throws kConfigError on alpha < 0, lambda < 0, tau <= 0, batch_size < 2
  // or lr < 0.
  void Validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Per-class prediction counts for one batch. Sums to the batch size.
struct BatchHistogram {
  Vector counts;
  double total = 0.0;
};

struct LossAndGradient {
  double loss = 0.0;
  MlpWeights gradient;
};

// (1/N) sum_i |feature_i - net(semantic_i)|^2 + lambda |W|^2, rows paired by
// index. Throws kEmptyBatch when there are no rows.
LossAndGradient DistanceLoss(const Matrix& batch_features, const Matrix& batch_semantics,
                             const MlpWeights& w, double lambda);

// argmax_c cos(feature_i, prototype_c), ties to the lowest c. A zero-norm
// prototype is kDegenerateVector unless allowed, in which case it scores 0.
std::vector<std::size_t> PredictBatchHard(const Matrix& batch_features, const Matrix& prototypes,
                                          bool allow_zero_prototypes = false);

BatchHistogram HardHistogram(std::span<const std::size_t> predictions, std::size_t classes);

// counts_c = sum_i softmax(cos(feature_i, prototype_.) / tau)_c
BatchHistogram SoftHistogram(const Matrix& batch_features, const Matrix& prototypes, double tau);

struct SkewnessLoss {
  double loss = 0.0;
  Vector gradient;  // d loss / d counts
};

// With mean and variance taken over the p counts and N = hist.total:
//   kInstances: sum_c h_c (h_c - mean)^3 / (N var^{3/2})
//   kClasses:   sum_c (h_c - mean)^3 / (p var^{3/2})
// Zero loss and gradient when var <= kVarianceEpsilon.
SkewnessLoss ComputeSkewnessLoss(const BatchHistogram& hist, SkewSum mode = SkewSum::kInstances);

// A training batch: instance features, their seen-class labels, and the
// semantic vectors of all p seen classes (labels index its rows).
struct Batch {
  Matrix features;
  std::vector<std::size_t> labels;
  Matrix class_semantics;
};

struct TotalLoss {
  double total = 0.0;     // distance + alpha * skewness
  double distance = 0.0;  // includes the lambda term
  double skewness = 0.0;  // 0 when alpha == 0
  MlpWeights gradient;
  BatchHistogram soft;
  BatchHistogram hard;
};

// Composite objective. With alpha == 0 the loss and gradient are exactly
// those of DistanceLoss on the per-instance semantics. Prototypes zeroed by
// a final ReLU score cosine 0 and receive only the distance gradient.
TotalLoss ComputeTotalLoss(const Batch& batch, const MlpWeights& w, const TrainConfig& cfg);

}  // namespace hubless

#endif  // HUBLESS_LOSSES_HPP_
