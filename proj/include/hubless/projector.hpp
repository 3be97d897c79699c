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

#ifndef HUBLESS_PROJECTOR_HPP_
#define HUBLESS_PROJECTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubless/tensor.hpp"

namespace hubless {

// y = W x + b, W stored (out x in).
struct DenseLayer {
  Matrix weight;
  Vector bias;

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Fully connected ReLU network. Every layer is followed by a ReLU, the last
// one only when final_relu is set.
struct MlpWeights {
  std::vector<DenseLayer> layers;
  bool final_relu = true;

  std::size_t input_dim() const { return layers.front().in(); }
  std::size_t output_dim() const { return layers.back().out(); }
  // Layer widths from input to output, e.g. {300, 512, 768, 1024}.
  std::vector<std::size_t> dims() const;
  std::size_t ParameterCount() const;

  // Same shapes, all zeros.
  MlpWeights ZerosLike() const;
  // Sum of squared weight-matrix entries; biases are not regularized.
  double WeightSqNorm() const;
  // this += scale * other, shapes must match.
  void AddScaled(const MlpWeights& other, double scale);
  // Adds scale * W to the weight-matrix part of `grads`.
  void AddWeightDecayGradient(MlpWeights& grads, double scale) const;
  // Rounds every parameter to the nearest float, the checkpoint precision.
  void RoundToFloat();
  // Hash of the exact parameter bits.
  std::uint64_t Fingerprint() const;

  // Flat views over all parameters, layer by layer, weight then bias.
  std::vector<std::span<double>> Blocks();
  std::vector<std::span<const double>> Blocks() const;

  friend bool operator==(const MlpWeights&, const MlpWeights&) = default;
};

// Weights uniform in +-sqrt(6 / fan_in), biases zero. Values are drawn at
// float precision so a checkpoint of fresh weights is exact. Throws
// kConfigError when `hidden` is empty or any width is zero.
MlpWeights InitWeights(std::size_t input_dim, std::span<const std::size_t> hidden,
                       std::size_t output_dim, std::uint64_t seed, bool final_relu = true);

// Activations recorded by Forward for Backward.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input of each layer
  std::vector<Matrix> preactivations;  // W x + b of each layer
  std::uint64_t fingerprint = 0;
};

// One input per row. Throws kDimMismatch on a width mismatch.
Matrix Forward(const MlpWeights& w, const Matrix& inputs, ForwardCache* cache = nullptr);
Vector Forward(const MlpWeights& w, std::span<const double> input);

// Reverse-mode gradient of sum_r <grad_output_r, forward(x_r)> with respect
// to the parameters. ReLU'(0) = 0. Throws kCacheMismatch when the cache was
// recorded against different weights.
MlpWeights Backward(const MlpWeights& w, const ForwardCache& cache, const Matrix& grad_output);

struct AdamState {
  MlpWeights first_moment;
  MlpWeights second_moment;
  std::uint64_t step_count = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState For(const MlpWeights& w, double lr);
};

void AdamStep(MlpWeights& w, const MlpWeights& grads, AdamState& state);

// Checkpoint file:
//   "HBLW" | u32 version = 1 | u32 header_bytes | header JSON (UTF-8)
//   | f32 little-endian parameters, layer by layer, weight rows then bias
// The header always carries "dims" and "final_relu"; callers add the rest.
void SaveCheckpoint(const MlpWeights& w, const nlohmann::json& header,
                    const std::filesystem::path& path);

struct Checkpoint {
  MlpWeights weights;
  nlohmann::json header;
};

Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Which side of the alignment the network maps. kSemanticToFeature projects
// class semantics into feature space (prototypes move, features stay);
// kFeatureToSemantic maps features into semantic space instead.
enum class Direction { kSemanticToFeature, kFeatureToSemantic };

std::string_view DirectionName(Direction d);  // "sem2feat" | "feat2sem"
Direction ParseDirection(std::string_view name);  // kConfigError if unknown

// Rows in the common space where queries meet prototypes.
Matrix EmbedFeatures(const MlpWeights& w, Direction d, const Matrix& features);
Matrix EmbedSemantics(const MlpWeights& w, Direction d, const Matrix& semantics);

}  // namespace hubless

#endif  // HUBLESS_PROJECTOR_HPP_
