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

#include "hubless/projector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hubless/error.hpp"
#include "hubless/rng.hpp"
#include "hubless/simd/dispatch.hpp"

namespace hubless {
namespace fs = std::filesystem;

std::vector<std::size_t> MlpWeights::dims() const {
  std::vector<std::size_t> out;
  if (layers.empty()) return out;
  out.push_back(input_dim());
  for (const auto& l : layers) out.push_back(l.out());
  return out;
}

std::size_t MlpWeights::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpWeights MlpWeights::ZerosLike() const {
  MlpWeights z;
  z.final_relu = final_relu;
  for (const auto& l : layers) z.layers.push_back({Matrix(l.out(), l.in()), Vector(l.out(), 0.0)});
  return z;
}

double MlpWeights::WeightSqNorm() const {
  const auto& k = simd::Active();
  double acc = 0.0;
  for (const auto& l : layers) {
    const auto w = l.weight.values();
    acc += k.dot(w.data(), w.data(), w.size());
  }
  return acc;
}

std::vector<std::span<double>> MlpWeights::Blocks() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.push_back(l.weight.values());
    out.push_back(l.bias);
  }
  return out;
}

std::vector<std::span<const double>> MlpWeights::Blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.push_back(l.weight.values());
    out.push_back(l.bias);
  }
  return out;
}

void MlpWeights::AddScaled(const MlpWeights& other, double scale) {
  if (dims() != other.dims()) throw Error(ErrorCode::kDimMismatch, "weight shapes differ");
  const auto& k = simd::Active();
  auto dst = Blocks();
  const auto src = other.Blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) k.axpy(scale, src[b].data(), dst[b].data(), dst[b].size());
}

void MlpWeights::AddWeightDecayGradient(MlpWeights& grads, double scale) const {
  const auto& k = simd::Active();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto w = layers[i].weight.values();
    k.axpy(scale, w.data(), grads.layers[i].weight.values().data(), w.size());
  }
}

void MlpWeights::RoundToFloat() {
  for (auto block : Blocks()) {
    for (double& v : block) v = static_cast<float>(v);
  }
}

std::uint64_t MlpWeights::Fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto block : Blocks()) {
    h = MixSeed(h ^ block.size());
    for (double v : block) h = (h ^ std::bit_cast<std::uint64_t>(v)) * 0x100000001b3ULL;
  }
  return MixSeed(h);
}

MlpWeights InitWeights(std::size_t input_dim, std::span<const std::size_t> hidden,
                       std::size_t output_dim, std::uint64_t seed, bool final_relu) {
  if (hidden.empty()) throw Error(ErrorCode::kConfigError, "at least one hidden layer is required");
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  if (std::find(widths.begin(), widths.end(), std::size_t{0}) != widths.end()) {
    throw Error(ErrorCode::kConfigError, "layer widths must be positive");
  }
  Rng rng(seed);
  MlpWeights w;
  w.final_relu = final_relu;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{Matrix(widths[l + 1], widths[l]), Vector(widths[l + 1], 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l]));
    for (double& v : layer.weight.values()) v = static_cast<float>(rng.Uniform(-limit, limit));
    w.layers.push_back(std::move(layer));
  }
  return w;
}

namespace {

bool HasRelu(const MlpWeights& w, std::size_t layer) {
  return layer + 1 < w.layers.size() || w.final_relu;
}

}  // namespace

Matrix Forward(const MlpWeights& w, const Matrix& inputs, ForwardCache* cache) {
  if (w.layers.empty()) throw Error(ErrorCode::kConfigError, "network has no layers");
  if (inputs.cols() != w.input_dim()) {
    throw Error(ErrorCode::kDimMismatch, "input width " + std::to_string(inputs.cols()) +
                                             ", network expects " + std::to_string(w.input_dim()));
  }
  const auto& k = simd::Active();
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
    cache->fingerprint = w.Fingerprint();
  }
  Matrix x = inputs;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const DenseLayer& layer = w.layers[l];
    Matrix z(x.rows(), layer.out());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double* xr = x.row(r).data();
      auto zr = z.row(r);
      for (std::size_t o = 0; o < layer.out(); ++o) {
        zr[o] = k.dot(layer.weight.row(o).data(), xr, layer.in()) + layer.bias[o];
      }
    }
    Matrix a = z;
    if (HasRelu(w, l)) {
      for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
    }
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preactivations.push_back(std::move(z));
    }
    x = std::move(a);
  }
  return x;
}

Vector Forward(const MlpWeights& w, std::span<const double> input) {
  Matrix one(1, input.size(), Vector(input.begin(), input.end()));
  const Matrix out = Forward(w, one);
  return Vector(out.values().begin(), out.values().end());
}

MlpWeights Backward(const MlpWeights& w, const ForwardCache& cache, const Matrix& grad_output) {
  if (cache.inputs.size() != w.layers.size() || cache.fingerprint != w.Fingerprint()) {
    throw Error(ErrorCode::kCacheMismatch, "forward cache was recorded with other weights");
  }
  const std::size_t rows = cache.inputs.front().rows();
  if (grad_output.rows() != rows || grad_output.cols() != w.output_dim()) {
    throw Error(ErrorCode::kDimMismatch, "output gradient shape does not match the forward pass");
  }
  const auto& k = simd::Active();
  MlpWeights grads = w.ZerosLike();
  Matrix g = grad_output;
  for (std::size_t l = w.layers.size(); l-- > 0;) {
    const DenseLayer& layer = w.layers[l];
    const Matrix& x = cache.inputs[l];
    if (HasRelu(w, l)) {
      const auto z = cache.preactivations[l].values();
      auto gv = g.values();
      for (std::size_t i = 0; i < gv.size(); ++i) {
        if (!(z[i] > 0.0)) gv[i] = 0.0;
      }
    }
    DenseLayer& dl = grads.layers[l];
    for (std::size_t o = 0; o < layer.out(); ++o) {
      double* dw = dl.weight.row(o).data();
      double db = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double go = g(r, o);
        if (go == 0.0) continue;
        k.axpy(go, x.row(r).data(), dw, layer.in());
        db += go;
      }
      dl.bias[o] = db;
    }
    if (l == 0) break;
    Matrix gx(rows, layer.in());
    for (std::size_t r = 0; r < rows; ++r) {
      double* dst = gx.row(r).data();
      for (std::size_t o = 0; o < layer.out(); ++o) {
        const double go = g(r, o);
        if (go == 0.0) continue;
        k.axpy(go, layer.weight.row(o).data(), dst, layer.in());
      }
    }
    g = std::move(gx);
  }
  return grads;
}

AdamState AdamState::For(const MlpWeights& w, double lr) {
  AdamState s;
  s.first_moment = w.ZerosLike();
  s.second_moment = w.ZerosLike();
  s.lr = lr;
  return s;
}

void AdamStep(MlpWeights& w, const MlpWeights& grads, AdamState& state) {
  if (w.dims() != grads.dims() || w.dims() != state.first_moment.dims()) {
    throw Error(ErrorCode::kDimMismatch, "adam shapes differ");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double step_size = state.lr / (1.0 - std::pow(state.beta1, t));
  const double v_correction = 1.0 / (1.0 - std::pow(state.beta2, t));
  const auto& k = simd::Active();
  auto wb = w.Blocks();
  auto mb = state.first_moment.Blocks();
  auto vb = state.second_moment.Blocks();
  const auto gb = grads.Blocks();
  for (std::size_t b = 0; b < wb.size(); ++b) {
    k.adam(wb[b].data(), mb[b].data(), vb[b].data(), gb[b].data(), wb[b].size(), step_size,
           v_correction, state.beta1, state.beta2, state.eps);
  }
}

namespace {

constexpr char kCheckpointMagic[4] = {'H', 'B', 'L', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t GetU32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

}  // namespace

void SaveCheckpoint(const MlpWeights& w, const nlohmann::json& header,
                    const fs::path& path) {
  nlohmann::json h = header;
  h["dims"] = w.dims();
  h["final_relu"] = w.final_relu;
  const std::string text = h.dump();
  std::string bytes(kCheckpointMagic, 4);
  PutU32(bytes, kCheckpointVersion);
  PutU32(bytes, static_cast<std::uint32_t>(text.size()));
  bytes += text;
  for (auto block : w.Blocks()) {
    for (double v : block) PutU32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

Checkpoint LoadCheckpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || bytes.compare(0, 4, kCheckpointMagic, 4) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + ": not a checkpoint");
  }
  if (GetU32(p + 4) != kCheckpointVersion) {
    throw Error(ErrorCode::kFormatError, path.string() + ": unsupported checkpoint version");
  }
  const std::size_t header_bytes = GetU32(p + 8);
  if (bytes.size() < 12 + header_bytes) {
    throw Error(ErrorCode::kFormatError, path.string() + ": truncated header");
  }
  Checkpoint ck;
  std::vector<std::size_t> dims;
  try {
    ck.header = nlohmann::json::parse(bytes.substr(12, header_bytes));
    dims = ck.header.at("dims").get<std::vector<std::size_t>>();
    ck.weights.final_relu = ck.header.at("final_relu").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
  if (dims.size() < 2 || std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end()) {
    throw Error(ErrorCode::kFormatError, path.string() + ": bad layer dims");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    ck.weights.layers.push_back({Matrix(dims[l + 1], dims[l]), Vector(dims[l + 1], 0.0)});
  }
  const std::size_t payload = bytes.size() - 12 - header_bytes;
  if (payload != 4 * ck.weights.ParameterCount()) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": payload is " + std::to_string(payload) + " bytes, expected " +
                    std::to_string(4 * ck.weights.ParameterCount()));
  }
  const unsigned char* cursor = p + 12 + header_bytes;
  for (auto block : ck.weights.Blocks()) {
    for (double& v : block) {
      const float f = std::bit_cast<float>(GetU32(cursor));
      if (!std::isfinite(f)) throw Error(ErrorCode::kCorruptData, path.string() + ": non-finite weight");
      v = f;
      cursor += 4;
    }
  }
  return ck;
}

std::string_view DirectionName(Direction d) {
  return d == Direction::kSemanticToFeature ? "sem2feat" : "feat2sem";
}

Direction ParseDirection(std::string_view name) {
  if (name == "sem2feat") return Direction::kSemanticToFeature;
  if (name == "feat2sem") return Direction::kFeatureToSemantic;
  throw Error(ErrorCode::kConfigError, "unknown direction '" + std::string(name) + "'");
}

Matrix EmbedFeatures(const MlpWeights& w, Direction d, const Matrix& features) {
  return d == Direction::kFeatureToSemantic ? Forward(w, features) : features;
}

Matrix EmbedSemantics(const MlpWeights& w, Direction d, const Matrix& semantics) {
  return d == Direction::kSemanticToFeature ? Forward(w, semantics) : semantics;
}

}  // namespace hubless
