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

#ifndef HUBLESS_TRAINER_HPP_
#define HUBLESS_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hubless/dataio.hpp"
#include "hubless/losses.hpp"
#include "hubless/projector.hpp"

namespace hubless {

// One row of log.csv.
struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double distance = 0.0;  // mean L_S over batches
  double skewness = 0.0;  // mean L_U over batches
  double total = 0.0;     // mean L_T over batches
  double hist_gap = 0.0;  // mean over batches of sum_c |soft_c - hard_c|
  double seen_top1 = 0.0;
  double skew_j1 = 0.0;   // NaN when the occurrence counts have no variance
  // Hard prediction counts summed over the epoch's batches. Not persisted.
  Vector hard_counts;

  friend bool operator==(const EpochLog& a, const EpochLog& b);
};

struct TrainRun {
  TrainConfig config;
  std::vector<std::string> seen_classes;
  std::size_t feature_dim = 0;
  std::size_t semantic_dim = 0;
  std::uint64_t step_count = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<EpochLog> log;
  // Rounded to checkpoint precision; telemetry was computed with the same
  // rounding, so reloading reproduces the logged metrics.
  MlpWeights weights;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains on the instances of manifest.seen found in seen_bank. Each epoch
// reshuffles with its own stream derived from cfg.seed and drops the final
// short batch. Throws kManifestMismatch when a seen class has no embedding
// and kConfigError when there are fewer instances than one batch.
TrainRun Train(const FeatureBank& seen_bank, const EmbeddingTable& table,
               const SplitManifest& manifest, const TrainConfig& cfg,
               const EpochCallback& on_epoch = {});

// Directory layout: config.json, weights.bin (checkpoint), log.csv with
// columns epoch,L_S,L_U,L_T,hist_gap,seen_top1,skew_j1.
void SaveRun(const TrainRun& run, const std::filesystem::path& dir);
TrainRun LoadRun(const std::filesystem::path& dir);

std::string FormatLogCsv(const std::vector<EpochLog>& log);
std::vector<EpochLog> ParseLogCsv(const std::string& text);

}  // namespace hubless

#endif  // HUBLESS_TRAINER_HPP_
