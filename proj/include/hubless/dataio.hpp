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

#ifndef HUBLESS_DATAIO_HPP_
#define HUBLESS_DATAIO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "hubless/tensor.hpp"

namespace hubless {

// Feature vectors with one class label per row. Labels index class_names.
struct FeatureBank {
  Matrix features;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  // Throws kFormatError on an empty bank, kManifestMismatch on bad labels
  // and kCorruptData on non-finite entries.
  void Validate() const;
};

// Binary layout, all little-endian:
//   "FBNK" | u32 version = 1 | u32 count | u32 dim | count*dim f32 row-major
// Labels live in a text sidecar, one class name per line (default
// "<path>.labels"). Class names are indexed in first-appearance order.
FeatureBank LoadFeatureBank(const std::filesystem::path& path,
                            const std::filesystem::path& labels_path = {});
void SaveFeatureBank(const FeatureBank& bank, const std::filesystem::path& path,
                     const std::filesystem::path& labels_path = {});

// Unit-normalizes every feature row in place.
void NormalizeRows(Matrix& m);

// Instances whose class name is in `keep`, relabeled against keep's order.
FeatureBank SelectClasses(const FeatureBank& bank, const std::vector<std::string>& keep);

struct EmbeddingTable {
  std::map<std::string, Vector> entries;
  std::size_t dim = 0;
  // Tokens that appeared more than once; the last record was kept.
  std::vector<std::string> duplicates;

  bool contains(const std::string& name) const { return entries.count(name) != 0; }
  // Throws kManifestMismatch for an unknown class.
  const Vector& at(const std::string& name) const;
  // Stacks the vectors of `names` as matrix rows.
  Matrix Gather(const std::vector<std::string>& names) const;
};

// GloVe-style text: "token v1 ... vd" per line. A leading word2vec
// "<count> <dim>" header line is skipped.
EmbeddingTable ParseEmbeddingTable(std::istream& in, bool normalize);
EmbeddingTable LoadEmbeddingTable(const std::filesystem::path& path, bool normalize);
void SaveEmbeddingTable(const EmbeddingTable& table, const std::filesystem::path& path);

struct SplitManifest {
  std::vector<std::string> seen;
  std::vector<std::string> unseen;

  // Disjointness and name resolution are data errors (kManifestMismatch);
  // fewer than two seen classes is kConfigError.
  void Validate(const EmbeddingTable& table) const;
};

// {"seen": [...], "unseen": [...]}
SplitManifest LoadSplitManifest(const std::filesystem::path& path);
void SaveSplitManifest(const SplitManifest& manifest, const std::filesystem::path& path);

// Parameters of the synthetic cluster generator.
struct SynthSpec {
  std::size_t seen_classes = 30;
  std::size_t unseen_classes = 10;
  std::size_t feature_dim = 64;
  std::size_t instances_per_class = 50;
  double cluster_spread = 0.3;
  std::size_t semantic_dim = 32;
  double semantic_noise = 0.02;
  // Rank of the subspace the class centroids vary in. Semantic vectors can
  // only determine a centroid up to this many degrees of freedom.
  std::size_t latent_dim = 12;
  // Common offset added to every centroid coordinate. Positive values pull
  // the clusters into a shared cone and crowd the cosines together; negative
  // ones push mass into the coordinates a final ReLU clips.
  double centroid_offset = 0.0;
  std::uint64_t seed = 7;

  void Validate() const;
};

struct SyntheticData {
  FeatureBank seen;
  FeatureBank unseen;
  EmbeddingTable table;
  SplitManifest manifest;
  // One row per class, seen classes first, in manifest order.
  Matrix centroids;
};

SyntheticData GenerateSynthetic(const SynthSpec& spec);

}  // namespace hubless

#endif  // HUBLESS_DATAIO_HPP_
