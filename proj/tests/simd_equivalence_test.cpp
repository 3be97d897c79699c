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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "hubless/rng.hpp"

namespace hubless::simd {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<const KernelTable*> Accelerated() {
  std::vector<const KernelTable*> out;
  if (const KernelTable* t = Avx2Kernels()) out.push_back(t);
  if (const KernelTable* t = NeonKernels()) out.push_back(t);
  return out;
}

std::vector<double> Random(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Normal() * std::exp(rng.Uniform(-3, 3));
  return v;
}

TEST(DispatchTest, ScalarAlwaysPresentAndActiveIsKnown) {
  EXPECT_EQ(ScalarKernels().backend, Backend::kScalar);
  const Backend active = Active().backend;
  EXPECT_FALSE(BackendName(active).empty());
  if (active == Backend::kAvx2) {
    EXPECT_NE(Avx2Kernels(), nullptr);
  }
}

// Reassociated sums differ from the sequential sum by at most about
// n * eps * sum |terms|.
TEST(EquivalenceTest, DotAndSquaredDistance) {
  const auto tables = Accelerated();
  if (tables.empty()) GTEST_SKIP() << "no accelerated backend on this machine";
  const KernelTable& ref = ScalarKernels();
  Rng rng(42);
  for (const KernelTable* t : tables) {
    for (std::size_t n = 0; n < 300; n += (n < 40 ? 1 : 37)) {
      for (int trial = 0; trial < 20; ++trial) {
        const auto a = Random(rng, n), b = Random(rng, n);
        double abs_dot = 0.0, abs_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          abs_dot += std::abs(a[i] * b[i]);
          abs_sq += (a[i] - b[i]) * (a[i] - b[i]);
        }
        const double bound = 2.0 * (n + 1) * kEps;
        EXPECT_NEAR(t->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n),
                    bound * abs_dot) << BackendName(t->backend) << " n=" << n;
        EXPECT_NEAR(t->sq_dist(a.data(), b.data(), n), ref.sq_dist(a.data(), b.data(), n),
                    bound * abs_sq) << BackendName(t->backend) << " n=" << n;
      }
    }
  }
}

TEST(EquivalenceTest, Axpy) {
  const auto tables = Accelerated();
  if (tables.empty()) GTEST_SKIP() << "no accelerated backend on this machine";
  Rng rng(43);
  for (const KernelTable* t : tables) {
    for (std::size_t n = 0; n < 70; ++n) {
      const auto x = Random(rng, n), y = Random(rng, n);
      const double alpha = rng.Normal();
      auto y_ref = y, y_simd = y;
      ScalarKernels().axpy(alpha, x.data(), y_ref.data(), n);
      t->axpy(alpha, x.data(), y_simd.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        // A fused multiply-add rounds once instead of twice.
        EXPECT_NEAR(y_simd[i], y_ref[i], 2 * kEps * (std::abs(alpha * x[i]) + std::abs(y[i])));
      }
    }
  }
}

TEST(EquivalenceTest, AdamUpdate) {
  const auto tables = Accelerated();
  if (tables.empty()) GTEST_SKIP() << "no accelerated backend on this machine";
  Rng rng(44);
  for (const KernelTable* t : tables) {
    for (std::size_t n = 0; n < 70; ++n) {
      auto w = Random(rng, n), m = Random(rng, n), g = Random(rng, n);
      std::vector<double> v(n);
      for (double& x : v) x = std::abs(rng.Normal());
      auto w2 = w, m2 = m, v2 = v;
      const double step = 1e-3 / (1 - std::pow(0.9, 3)), vc = 1 / (1 - std::pow(0.999, 3));
      ScalarKernels().adam(w.data(), m.data(), v.data(), g.data(), n, step, vc, 0.9, 0.999, 1e-8);
      t->adam(w2.data(), m2.data(), v2.data(), g.data(), n, step, vc, 0.9, 0.999, 1e-8);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(m2[i], m[i], 4 * kEps * (std::abs(m[i]) + std::abs(g[i])));
        EXPECT_NEAR(v2[i], v[i], 4 * kEps * (std::abs(v[i]) + g[i] * g[i]));
        EXPECT_NEAR(w2[i], w[i], 8 * kEps * (std::abs(w[i]) + step));
      }
    }
  }
}

}  // namespace
}  // namespace hubless::simd
