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

#include "hubless/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hubless/error.hpp"
#include "hubless/kernels.hpp"
#include "hubless/rng.hpp"

namespace hubless {
namespace fs = std::filesystem;

namespace {

constexpr int kRunFormatVersion = 1;
constexpr std::uint64_t kInitStream = 0;
constexpr const char* kLogHeader = "epoch,L_S,L_U,L_T,hist_gap,seen_top1,skew_j1";

bool SameDouble(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

// Seen-set accuracy and j=1 skewness of the given weights.
void Telemetry(const MlpWeights& w, const TrainConfig& cfg, const Matrix& features,
               const std::vector<std::size_t>& labels, const Matrix& class_semantics,
               EpochLog& row) {
  const Matrix prototypes = EmbedSemantics(w, cfg.direction, class_semantics);
  const Matrix queries = EmbedFeatures(w, cfg.direction, features);
  const std::vector<std::size_t> predicted = PredictBatchHard(queries, prototypes, true);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  row.seen_top1 = static_cast<double>(correct) / static_cast<double>(labels.size());
  // At j = 1 the occurrence counts are the hard prediction counts.
  const BatchHistogram counts = HardHistogram(predicted, prototypes.rows());
  try {
    row.skew_j1 = SkewnessOfCounts(counts.counts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroVariance) throw;
    row.skew_j1 = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

bool operator==(const EpochLog& a, const EpochLog& b) {
  return a.epoch == b.epoch && SameDouble(a.distance, b.distance) &&
         SameDouble(a.skewness, b.skewness) && SameDouble(a.total, b.total) &&
         SameDouble(a.hist_gap, b.hist_gap) && SameDouble(a.seen_top1, b.seen_top1) &&
         SameDouble(a.skew_j1, b.skew_j1);
}

TrainRun Train(const FeatureBank& seen_bank, const EmbeddingTable& table,
               const SplitManifest& manifest, const TrainConfig& cfg,
               const EpochCallback& on_epoch) {
  cfg.Validate();
  if (manifest.seen.size() < 2) {
    throw Error(ErrorCode::kConfigError, "at least two seen classes are required");
  }
  const Matrix class_semantics = table.Gather(manifest.seen);
  FeatureBank data = SelectClasses(seen_bank, manifest.seen);
  if (data.size() < cfg.batch_size) {
    throw Error(ErrorCode::kConfigError, std::to_string(data.size()) +
                                             " seen instances, fewer than one batch of " +
                                             std::to_string(cfg.batch_size));
  }
  if (cfg.normalize_features) NormalizeRows(data.features);

  TrainRun run;
  run.config = cfg;
  run.seen_classes = manifest.seen;
  run.feature_dim = data.dim();
  run.semantic_dim = table.dim;

  const bool s2f = cfg.direction == Direction::kSemanticToFeature;
  const std::size_t in_dim = s2f ? table.dim : data.dim();
  const std::size_t out_dim = s2f ? data.dim() : table.dim;
  MlpWeights w = InitWeights(in_dim, cfg.hidden, out_dim, DeriveSeed(cfg.seed, kInitStream),
                             cfg.final_relu);
  AdamState adam = AdamState::For(w, cfg.lr);
  run.adam_beta1 = adam.beta1;
  run.adam_beta2 = adam.beta2;
  run.adam_eps = adam.eps;

  const std::size_t n = data.size();
  const std::size_t p = manifest.seen.size();
  const std::size_t batches = n / cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> batch_rows(cfg.batch_size);
  Batch batch;
  batch.class_semantics = class_semantics;
  batch.labels.resize(cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(DeriveSeed(cfg.seed, epoch));
    rng.Shuffle(std::span<std::size_t>(order));

    EpochLog row;
    row.epoch = epoch;
    row.hard_counts.assign(p, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        batch_rows[i] = order[b * cfg.batch_size + i];
        batch.labels[i] = data.labels[batch_rows[i]];
      }
      batch.features = GatherRows(data.features, batch_rows);
      const TotalLoss loss = ComputeTotalLoss(batch, w, cfg);
      AdamStep(w, loss.gradient, adam);

      row.distance += loss.distance;
      row.skewness += loss.skewness;
      row.total += loss.total;
      for (std::size_t c = 0; c < p; ++c) {
        row.hist_gap += std::abs(loss.soft.counts[c] - loss.hard.counts[c]);
        row.hard_counts[c] += loss.hard.counts[c];
      }
    }
    const double nb = static_cast<double>(batches);
    row.distance /= nb;
    row.skewness /= nb;
    row.total /= nb;
    row.hist_gap /= nb;

    MlpWeights snapshot = w;
    snapshot.RoundToFloat();
    Telemetry(snapshot, cfg, data.features, data.labels, class_semantics, row);
    if (!AllFinite(std::span<const double>(&row.total, 1))) {
      throw Error(ErrorCode::kCorruptData, "training diverged at epoch " + std::to_string(epoch));
    }
    run.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  w.RoundToFloat();
  run.weights = std::move(w);
  run.step_count = adam.step_count;
  return run;
}

std::string FormatLogCsv(const std::vector<EpochLog>& log) {
  std::string out = std::string(kLogHeader) + "\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.distance, r.skewness, r.total, r.hist_gap, r.seen_top1, r.skew_j1);
    out += buf;
  }
  return out;
}

std::vector<EpochLog> ParseLogCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kLogHeader) {
    throw Error(ErrorCode::kFormatError, "log.csv header mismatch");
  }
  std::vector<EpochLog> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorCode::kFormatError, "log.csv row has wrong width");
    EpochLog r;
    try {
      r.epoch = std::stoul(cells[0]);
      double* slots[] = {&r.distance, &r.skewness, &r.total, &r.hist_gap, &r.seen_top1, &r.skew_j1};
      for (int k = 0; k < 6; ++k) *slots[k] = std::stod(cells[k + 1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormatError, "log.csv has an unparseable cell");
    }
    log.push_back(r);
  }
  return log;
}

void SaveRun(const TrainRun& run, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  const nlohmann::json adam = {
      {"beta1", run.adam_beta1}, {"beta2", run.adam_beta2}, {"eps", run.adam_eps}};
  const nlohmann::json config = {
      {"format_version", kRunFormatVersion},
      {"config", run.config},
      {"seen_classes", run.seen_classes},
      {"feature_dim", run.feature_dim},
      {"semantic_dim", run.semantic_dim},
      {"step_count", run.step_count},
      {"optimizer", {{"name", "adam"}, {"params", adam}}},
      {"epochs_completed", run.log.size()},
  };
  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write config.json");
    out << config.dump(2) << "\n";
  }
  const nlohmann::json header = {{"seed", run.config.seed},
                                 {"step_count", run.step_count},
                                 {"config", run.config}};
  SaveCheckpoint(run.weights, header, dir / "weights.bin");
  std::ofstream log(dir / "log.csv", std::ios::binary | std::ios::trunc);
  if (!log) throw Error(ErrorCode::kIoError, "cannot write log.csv");
  log << FormatLogCsv(run.log);
}

TrainRun LoadRun(const fs::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + (dir / "config.json").string());
  TrainRun run;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    const int version = j.at("format_version").get<int>();
    if (version != kRunFormatVersion) {
      throw Error(ErrorCode::kFormatError, "run format version " + std::to_string(version) +
                                               " is not supported");
    }
    run.config = j.at("config").get<TrainConfig>();
    run.seen_classes = j.at("seen_classes").get<std::vector<std::string>>();
    run.feature_dim = j.at("feature_dim").get<std::size_t>();
    run.semantic_dim = j.at("semantic_dim").get<std::size_t>();
    run.step_count = j.at("step_count").get<std::uint64_t>();
    const auto& adam = j.at("optimizer").at("params");
    run.adam_beta1 = adam.at("beta1").get<double>();
    run.adam_beta2 = adam.at("beta2").get<double>();
    run.adam_eps = adam.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, "config.json: " + std::string(e.what()));
  }
  Checkpoint ck = LoadCheckpoint(dir / "weights.bin");
  run.weights = std::move(ck.weights);
  const bool s2f = run.config.direction == Direction::kSemanticToFeature;
  if (run.weights.input_dim() != (s2f ? run.semantic_dim : run.feature_dim) ||
      run.weights.output_dim() != (s2f ? run.feature_dim : run.semantic_dim)) {
    throw Error(ErrorCode::kFormatError, "weights.bin does not match config.json dimensions");
  }
  std::ifstream log(dir / "log.csv", std::ios::binary);
  if (!log) throw Error(ErrorCode::kIoError, "cannot open log.csv");
  std::ostringstream ss;
  ss << log.rdbuf();
  run.log = ParseLogCsv(ss.str());
  return run;
}

}  // namespace hubless
