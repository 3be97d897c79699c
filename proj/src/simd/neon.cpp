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

#include <arm_neon.h>

#include <cmath>

#include "hubless/simd/dispatch.hpp"

namespace hubless::simd {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

double SqDist(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + k), vld1q_f64(b + k));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), va, vld1q_f64(x + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

void Adam(double* w, double* m, double* v, const double* g, std::size_t n,
          double step_size, double v_correction, double beta1, double beta2,
          double eps) {
  const float64x2_t b1 = vdupq_n_f64(beta1);
  const float64x2_t b2 = vdupq_n_f64(beta2);
  const float64x2_t c1 = vdupq_n_f64(1.0 - beta1);
  const float64x2_t c2 = vdupq_n_f64(1.0 - beta2);
  const float64x2_t step = vdupq_n_f64(step_size);
  const float64x2_t vc = vdupq_n_f64(v_correction);
  const float64x2_t ve = vdupq_n_f64(eps);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t gk = vld1q_f64(g + k);
    const float64x2_t mk = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + k)), vmulq_f64(c1, gk));
    const float64x2_t vk = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + k)), vmulq_f64(c2, vmulq_f64(gk, gk)));
    const float64x2_t denom = vaddq_f64(vsqrtq_f64(vmulq_f64(vk, vc)), ve);
    vst1q_f64(m + k, mk);
    vst1q_f64(v + k, vk);
    vst1q_f64(w + k, vsubq_f64(vld1q_f64(w + k), vdivq_f64(vmulq_f64(step, mk), denom)));
  }
  for (; k < n; ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * (g[k] * g[k]);
    w[k] -= step_size * m[k] / (std::sqrt(v[k] * v_correction) + eps);
  }
}

}  // namespace

// Advanced SIMD is mandatory on AArch64.
const KernelTable* NeonKernels() {
  static const KernelTable table{Backend::kNeon, Dot, SqDist, Axpy, Adam};
  return &table;
}

}  // namespace hubless::simd
