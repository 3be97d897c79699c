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

#include "hubless/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hubless/error.hpp"
#include "hubless/simd/dispatch.hpp"

namespace hubless {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateVector: return "DegenerateVector";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kManifestMismatch: return "ManifestMismatch";
    case ErrorCode::kCorruptData: return "CorruptData";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimMismatch,
                "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                    " given " + std::to_string(values_.size()) + " values");
  }
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Matrix GatherRows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = source.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

namespace {

void RequireSameDim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimMismatch, std::to_string(a.size()) + " vs " +
                                             std::to_string(b.size()));
  }
}

}  // namespace

double Dot(std::span<const double> a, std::span<const double> b) {
  RequireSameDim(a, b);
  return simd::Active().dot(a.data(), b.data(), a.size());
}

double Norm(std::span<const double> a) {
  return std::sqrt(simd::Active().dot(a.data(), a.data(), a.size()));
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  RequireSameDim(a, b);
  const auto& k = simd::Active();
  const double na = std::sqrt(k.dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(k.dot(b.data(), b.data(), b.size()));
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw Error(ErrorCode::kDegenerateVector, "cosine of a zero-norm vector");
  }
  return std::clamp(k.dot(a.data(), b.data(), a.size()) / (na * nb), -1.0, 1.0);
}

double L2DistanceSq(std::span<const double> a, std::span<const double> b) {
  RequireSameDim(a, b);
  return simd::Active().sq_dist(a.data(), b.data(), a.size());
}

Vector Softmax(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kConfigError, "softmax temperature must be positive");
  }
  if (scores.empty()) return {};
  const double top = *std::max_element(scores.begin(), scores.end());
  Vector out(scores.size());
  double total = 0.0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    out[c] = std::exp((scores[c] - top) / temperature);
    total += out[c];
  }
  for (double& v : out) v /= total;
  return out;
}

double SkewnessOfCounts(std::span<const double> counts) {
  if (counts.empty()) {
    throw Error(ErrorCode::kZeroVariance, "skewness of an empty distribution");
  }
  const double n = static_cast<double>(counts.size());
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= n;
  double var = 0.0;
  double third = 0.0;
  for (double c : counts) {
    const double d = c - mean;
    var += d * d;
    third += d * d * d;
  }
  var /= n;
  if (var <= kVarianceEpsilon) {
    throw Error(ErrorCode::kZeroVariance, "occurrence counts are uniform");
  }
  return third / (n * std::pow(var, 1.5));
}

void NormalizeInPlace(std::span<double> a) {
  const double n = Norm(a);
  if (!(n > 0.0)) throw Error(ErrorCode::kDegenerateVector, "cannot normalize a zero vector");
  for (double& v : a) v /= n;
}

bool AllFinite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace hubless
