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

// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "hubless/simd/dispatch.hpp"

namespace hubless::simd {
namespace {

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double Dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  if (k + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    k += 4;
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

double SqDist(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  if (k + 4 <= n) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    k += 4;
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

void Adam(double* w, double* m, double* v, const double* g, std::size_t n,
          double step_size, double v_correction, double beta1, double beta2,
          double eps) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d step = _mm256_set1_pd(step_size);
  const __m256d vc = _mm256_set1_pd(v_correction);
  const __m256d ve = _mm256_set1_pd(eps);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d gk = _mm256_loadu_pd(g + k);
    const __m256d mk = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + k)), _mm256_mul_pd(c1, gk));
    const __m256d vk = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + k)),
                                     _mm256_mul_pd(c2, _mm256_mul_pd(gk, gk)));
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vk, vc)), ve);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(step, mk), denom);
    _mm256_storeu_pd(m + k, mk);
    _mm256_storeu_pd(v + k, vk);
    _mm256_storeu_pd(w + k, _mm256_sub_pd(_mm256_loadu_pd(w + k), upd));
  }
  for (; k < n; ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * (g[k] * g[k]);
    w[k] -= step_size * m[k] / (std::sqrt(v[k] * v_correction) + eps);
  }
}

}  // namespace

const KernelTable* Avx2Kernels() {
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{Backend::kAvx2, Dot, SqDist, Axpy, Adam};
  return supported ? &table : nullptr;
}

}  // namespace hubless::simd
