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

#ifndef HUBLESS_KERNELS_HPP_
#define HUBLESS_KERNELS_HPP_

#include <span>

#include "hubless/tensor.hpp"

namespace hubless {

// Variance at or below this is treated as zero by the skewness statistics.
inline constexpr double kVarianceEpsilon = 1e-12;

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);

// a.b / (|a| |b|), clamped to [-1, 1]. Throws kDegenerateVector on a
// zero-norm input and kDimMismatch on unequal lengths.
double Cosine(std::span<const double> a, std::span<const double> b);

double L2DistanceSq(std::span<const double> a, std::span<const double> b);

// Max-subtracted softmax of scores / temperature.
Vector Softmax(std::span<const double> scores, double temperature);

// Third standardized moment of `counts` with population statistics:
//   sum_i (c_i - mean)^3 / (n * var^{3/2})
// Throws kZeroVariance when var <= kVarianceEpsilon.
double SkewnessOfCounts(std::span<const double> counts);

// Scales a to unit length; throws kDegenerateVector when |a| == 0.
void NormalizeInPlace(std::span<double> a);

// True when every entry is finite.
bool AllFinite(std::span<const double> a);

}  // namespace hubless

#endif  // HUBLESS_KERNELS_HPP_
