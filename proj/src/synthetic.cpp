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
#include <cstdio>
#include <string>

#include "hubless/dataio.hpp"
#include "hubless/error.hpp"
#include "hubless/rng.hpp"

namespace hubless {

void SynthSpec::Validate() const {
  if (seen_classes < 2) throw Error(ErrorCode::kConfigError, "need at least two seen classes");
  if (unseen_classes < 1 || feature_dim < 1 || instances_per_class < 1 || semantic_dim < 1 ||
      latent_dim < 1) {
    throw Error(ErrorCode::kConfigError, "synthetic counts and dimensions must be positive");
  }
  if (!(cluster_spread >= 0.0) || !(semantic_noise >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "spread and noise must be nonnegative");
  }
}

namespace {

enum Stream : std::uint64_t { kCentroids = 1, kSemanticMap, kSemanticNoise, kInstances };

std::string ClassName(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class%02zu", k);
  return buf;
}

FeatureBank SampleBank(const Matrix& centroids, std::size_t first, std::size_t count,
                       const std::vector<std::string>& names, std::size_t per_class,
                       double spread, Rng& rng) {
  const std::size_t m = centroids.cols();
  FeatureBank bank;
  bank.class_names = names;
  bank.features = Matrix(count * per_class, m);
  std::size_t row = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const auto centre = centroids.row(first + c);
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      auto out = bank.features.row(row);
      for (std::size_t k = 0; k < m; ++k) {
        // Stored at file precision so in-memory and reloaded banks agree.
        out[k] = static_cast<float>(centre[k] + spread * rng.Normal());
      }
      bank.labels.push_back(c);
    }
  }
  return bank;
}

}  // namespace

SyntheticData GenerateSynthetic(const SynthSpec& spec) {
  spec.Validate();
  const std::size_t classes = spec.seen_classes + spec.unseen_classes;
  const std::size_t m = spec.feature_dim;
  const std::size_t d = spec.semantic_dim;
  const std::size_t r = spec.latent_dim;

  // Centroids: max(0, offset + B z) with B (m x r) and z ~ N(0, I_r).
  Rng crng(DeriveSeed(spec.seed, kCentroids));
  Matrix basis(m, r);
  for (double& v : basis.values()) v = crng.Normal() / std::sqrt(static_cast<double>(r));
  Matrix centroids(classes, m);
  Vector z(r);
  for (std::size_t c = 0; c < classes; ++c) {
    for (double& v : z) v = crng.Normal();
    for (std::size_t k = 0; k < m; ++k) {
      double acc = spec.centroid_offset;
      for (std::size_t j = 0; j < r; ++j) acc += basis(k, j) * z[j];
      centroids(c, k) = acc > 0.0 ? acc : 0.0;
    }
  }

  // Semantic vectors: e = A c + noise, A (d x m) fixed.
  Rng arng(DeriveSeed(spec.seed, kSemanticMap));
  Matrix map(d, m);
  for (double& v : map.values()) v = arng.Normal() / std::sqrt(static_cast<double>(m));
  Rng nrng(DeriveSeed(spec.seed, kSemanticNoise));

  SyntheticData out;
  out.centroids = centroids;
  out.table.dim = d;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::string name = ClassName(c);
    (c < spec.seen_classes ? out.manifest.seen : out.manifest.unseen).push_back(name);
    Vector e(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += map(i, k) * centroids(c, k);
      e[i] = acc + spec.semantic_noise * nrng.Normal();
    }
    out.table.entries.emplace(name, std::move(e));
  }

  Rng irng(DeriveSeed(spec.seed, kInstances));
  out.seen = SampleBank(centroids, 0, spec.seen_classes, out.manifest.seen,
                        spec.instances_per_class, spec.cluster_spread, irng);
  out.unseen = SampleBank(centroids, spec.seen_classes, spec.unseen_classes,
                          out.manifest.unseen, spec.instances_per_class, spec.cluster_spread,
                          irng);
  return out;
}

}  // namespace hubless
