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

#include "hubless/simd/dispatch.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace hubless::simd {

#ifndef HUBLESS_HAVE_AVX2
const KernelTable* Avx2Kernels() { return nullptr; }
#endif
#ifndef HUBLESS_HAVE_NEON
const KernelTable* NeonKernels() { return nullptr; }
#endif

std::string_view BackendName(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

namespace {

const KernelTable& Select() {
  const char* env = std::getenv("HUBLESS_KERNELS");
  const std::string wanted = env ? env : "";
  if (wanted == "scalar") return ScalarKernels();
  if (wanted == "avx2") {
    if (const KernelTable* t = Avx2Kernels()) return *t;
    std::cerr << "warning: HUBLESS_KERNELS=avx2 unsupported here, using scalar\n";
    return ScalarKernels();
  }
  if (wanted == "neon") {
    if (const KernelTable* t = NeonKernels()) return *t;
    std::cerr << "warning: HUBLESS_KERNELS=neon unsupported here, using scalar\n";
    return ScalarKernels();
  }
  if (!wanted.empty()) {
    std::cerr << "warning: unknown HUBLESS_KERNELS=" << wanted << ", auto-selecting\n";
  }
  if (const KernelTable* t = Avx2Kernels()) return *t;
  if (const KernelTable* t = NeonKernels()) return *t;
  return ScalarKernels();
}

}  // namespace

const KernelTable& Active() {
  static const KernelTable& table = Select();
  return table;
}

}  // namespace hubless::simd
