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

#ifndef HUBLESS_INFERENCE_HPP_
#define HUBLESS_INFERENCE_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubless/dataio.hpp"
#include "hubless/projector.hpp"
#include "hubless/tensor.hpp"

namespace hubless {

// Class prototypes in the space where features are compared with
// semantics, one row per class.
struct ClassPrototypes {
  std::vector<std::string> names;
  Matrix vectors;
  std::vector<bool> seen;
};

// Embeds the semantic vectors of `seen` then `unseen` classes.
ClassPrototypes BuildPrototypes(const MlpWeights& w, Direction direction,
                                const EmbeddingTable& table, const std::vector<std::string>& seen,
                                const std::vector<std::string>& unseen);

// argmax over prototypes of cos(feature, prototype); ties to the lowest index.
std::size_t ZslPredict(std::span<const double> feature, const Matrix& prototypes);

// argmax over prototypes of cos(feature, prototype) - beta * seen[t].
std::size_t GzslPredict(std::span<const double> feature, const Matrix& prototypes,
                        const std::vector<bool>& seen_mask, double beta);

// 2su / (s + u), or 0 when s + u == 0.
double HarmonicMean(double seen, double unseen);

struct EvalReport {
  std::string task;  // "zsl" | "gzsl"
  double top1_unseen = 0.0;
  std::optional<double> top1_seen;
  std::optional<double> harmonic_mean;
  double beta = 0.0;
  std::vector<std::string> class_names;  // prototype order
  std::map<std::string, double> per_class_accuracy;
  // confusion[true][predicted], indexed like class_names.
  std::vector<std::vector<std::size_t>> confusion;
};

// Instance-averaged top-1 accuracy of ZslPredict on `bank`. Every bank
// class must name a prototype (kManifestMismatch otherwise).
EvalReport EvaluateZsl(const FeatureBank& bank, const ClassPrototypes& prototypes,
                       const MlpWeights& w, Direction direction);

// Seen and unseen top-1 under GzslPredict over all prototypes, and their
// harmonic mean.
EvalReport EvaluateGzsl(const FeatureBank& seen_bank, const FeatureBank& unseen_bank,
                        const ClassPrototypes& prototypes, const MlpWeights& w,
                        Direction direction, double beta);

// {task, top1_seen, top1_unseen, harmonic_mean, per_class, beta, ...}.
// `config_echo` is copied verbatim.
nlohmann::json ToJson(const EvalReport& report, const nlohmann::json& config_echo = {});

}  // namespace hubless

#endif  // HUBLESS_INFERENCE_HPP_
