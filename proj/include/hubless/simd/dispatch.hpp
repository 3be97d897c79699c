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

#ifndef HUBLESS_SIMD_DISPATCH_HPP_
#define HUBLESS_SIMD_DISPATCH_HPP_

#include <cstddef>
#include <string_view>

namespace hubless::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view BackendName(Backend backend);

// Inner loops shared by every module. Each backend fills one table; all
// entries of a table must agree with the scalar table to rounding.
struct KernelTable {
  Backend backend;
  // sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_k (a[k] - b[k])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  // y[k] += alpha * x[k]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // Bias-corrected Adam update of w in place; m and v are the moments.
  // step_size = lr / (1 - beta1^t), v_correction = 1 / (1 - beta2^t).
  void (*adam)(double* w, double* m, double* v, const double* g, std::size_t n,
               double step_size, double v_correction, double beta1,
               double beta2, double eps);
};

const KernelTable& ScalarKernels();
// nullptr when the backend was not compiled in or the CPU lacks it.
const KernelTable* Avx2Kernels();
const KernelTable* NeonKernels();

// Table used by the library. Picked once per process: the best supported
// backend, unless HUBLESS_KERNELS=scalar|avx2|neon says otherwise.
const KernelTable& Active();

}  // namespace hubless::simd

#endif  // HUBLESS_SIMD_DISPATCH_HPP_
