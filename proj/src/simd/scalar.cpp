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

#include <cmath>

#include "hubless/simd/dispatch.hpp"

namespace hubless::simd {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

double SqDist(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void Adam(double* w, double* m, double* v, const double* g, std::size_t n,
          double step_size, double v_correction, double beta1, double beta2,
          double eps) {
  const double one_minus_b1 = 1.0 - beta1;
  const double one_minus_b2 = 1.0 - beta2;
  for (std::size_t k = 0; k < n; ++k) {
    m[k] = beta1 * m[k] + one_minus_b1 * g[k];
    v[k] = beta2 * v[k] + one_minus_b2 * (g[k] * g[k]);
    w[k] -= step_size * m[k] / (std::sqrt(v[k] * v_correction) + eps);
  }
}

}  // namespace

const KernelTable& ScalarKernels() {
  static const KernelTable table{Backend::kScalar, Dot, SqDist, Axpy, Adam};
  return table;
}

}  // namespace hubless::simd
