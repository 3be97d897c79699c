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

#include "hubless/inference.hpp"

#include <algorithm>
#include <cmath>

#include "hubless/error.hpp"
#include "hubless/kernels.hpp"
#include "hubless/parallel.hpp"
#include "hubless/simd/dispatch.hpp"

namespace hubless {

ClassPrototypes BuildPrototypes(const MlpWeights& w, Direction direction,
                                const EmbeddingTable& table, const std::vector<std::string>& seen,
                                const std::vector<std::string>& unseen) {
  ClassPrototypes out;
  out.names = seen;
  out.names.insert(out.names.end(), unseen.begin(), unseen.end());
  out.seen.assign(seen.size(), true);
  out.seen.resize(out.names.size(), false);
  out.vectors = EmbedSemantics(w, direction, table.Gather(out.names));
  return out;
}

namespace {

// Scores every prototype; penalty is subtracted from seen ones.
std::size_t ArgmaxCosine(std::span<const double> feature, const Matrix& prototypes,
                         const std::vector<bool>* seen_mask, double penalty) {
  if (prototypes.rows() == 0) throw Error(ErrorCode::kConfigError, "no prototypes");
  if (feature.size() != prototypes.cols()) {
    throw Error(ErrorCode::kDimMismatch, "feature and prototype widths differ");
  }
  if (seen_mask && seen_mask->size() != prototypes.rows()) {
    throw Error(ErrorCode::kDimMismatch, "seen mask and prototypes differ in length");
  }
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t c = 0; c < prototypes.rows(); ++c) {
    double score = Cosine(feature, prototypes.row(c));
    if (seen_mask && (*seen_mask)[c]) score -= penalty;
    if (c == 0 || score > best_score) {
      best = c;
      best_score = score;
    }
  }
  return best;
}

std::vector<std::size_t> PrototypeIndexOf(const FeatureBank& bank, const ClassPrototypes& protos) {
  std::vector<std::size_t> index(bank.class_names.size());
  for (std::size_t c = 0; c < bank.class_names.size(); ++c) {
    auto it = std::find(protos.names.begin(), protos.names.end(), bank.class_names[c]);
    if (it == protos.names.end()) {
      throw Error(ErrorCode::kManifestMismatch,
                  "bank class '" + bank.class_names[c] + "' has no prototype");
    }
    index[c] = static_cast<std::size_t>(it - protos.names.begin());
  }
  return index;
}

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Predicts every instance and accumulates into report; returns the tally.
Tally Score(const FeatureBank& bank, const ClassPrototypes& protos, const MlpWeights& w,
            Direction direction, const std::vector<bool>* seen_mask, double beta,
            EvalReport& report, std::map<std::string, Tally>& per_class) {
  const std::vector<std::size_t> truth_index = PrototypeIndexOf(bank, protos);
  const Matrix queries = EmbedFeatures(w, direction, bank.features);
  std::vector<std::size_t> predicted(bank.size());
  ParallelFor(bank.size(), [&](std::size_t i) {
    predicted[i] = ArgmaxCosine(queries.row(i), protos.vectors, seen_mask, beta);
  });
  Tally t;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const std::size_t truth = truth_index[bank.labels[i]];
    const bool hit = predicted[i] == truth;
    t.correct += hit;
    ++t.total;
    Tally& pc = per_class[protos.names[truth]];
    pc.correct += hit;
    ++pc.total;
    ++report.confusion[truth][predicted[i]];
  }
  return t;
}

void InitReport(EvalReport& r, const ClassPrototypes& protos) {
  r.class_names = protos.names;
  r.confusion.assign(protos.names.size(), std::vector<std::size_t>(protos.names.size(), 0));
}

void FinishPerClass(EvalReport& r, const std::map<std::string, Tally>& per_class) {
  for (const auto& [name, t] : per_class) {
    r.per_class_accuracy[name] = static_cast<double>(t.correct) / static_cast<double>(t.total);
  }
}

double Ratio(const Tally& t) {
  return t.total ? static_cast<double>(t.correct) / static_cast<double>(t.total) : 0.0;
}

}  // namespace

std::size_t ZslPredict(std::span<const double> feature, const Matrix& prototypes) {
  return ArgmaxCosine(feature, prototypes, nullptr, 0.0);
}

std::size_t GzslPredict(std::span<const double> feature, const Matrix& prototypes,
                        const std::vector<bool>& seen_mask, double beta) {
  if (!std::isfinite(beta)) throw Error(ErrorCode::kConfigError, "beta must be finite");
  return ArgmaxCosine(feature, prototypes, &seen_mask, beta);
}

double HarmonicMean(double seen, double unseen) {
  const double sum = seen + unseen;
  return sum > 0.0 ? 2.0 * seen * unseen / sum : 0.0;
}

EvalReport EvaluateZsl(const FeatureBank& bank, const ClassPrototypes& prototypes,
                       const MlpWeights& w, Direction direction) {
  EvalReport r;
  r.task = "zsl";
  InitReport(r, prototypes);
  std::map<std::string, Tally> per_class;
  r.top1_unseen = Ratio(Score(bank, prototypes, w, direction, nullptr, 0.0, r, per_class));
  FinishPerClass(r, per_class);
  return r;
}

EvalReport EvaluateGzsl(const FeatureBank& seen_bank, const FeatureBank& unseen_bank,
                        const ClassPrototypes& prototypes, const MlpWeights& w,
                        Direction direction, double beta) {
  if (!std::isfinite(beta)) throw Error(ErrorCode::kConfigError, "beta must be finite");
  EvalReport r;
  r.task = "gzsl";
  r.beta = beta;
  InitReport(r, prototypes);
  std::map<std::string, Tally> per_class;
  const Tally s = Score(seen_bank, prototypes, w, direction, &prototypes.seen, beta, r, per_class);
  const Tally u = Score(unseen_bank, prototypes, w, direction, &prototypes.seen, beta, r, per_class);
  r.top1_seen = Ratio(s);
  r.top1_unseen = Ratio(u);
  r.harmonic_mean = HarmonicMean(*r.top1_seen, r.top1_unseen);
  FinishPerClass(r, per_class);
  return r;
}

nlohmann::json ToJson(const EvalReport& report, const nlohmann::json& config_echo) {
  nlohmann::json j = {
      {"task", report.task},
      {"top1_unseen", report.top1_unseen},
      {"top1_seen", report.top1_seen ? nlohmann::json(*report.top1_seen) : nlohmann::json()},
      {"harmonic_mean",
       report.harmonic_mean ? nlohmann::json(*report.harmonic_mean) : nlohmann::json()},
      {"beta", report.beta},
      {"per_class", report.per_class_accuracy},
      {"classes", report.class_names},
      {"confusion", report.confusion},
      {"config_echo", config_echo.is_null() ? nlohmann::json::object() : config_echo},
  };
  return j;
}

}  // namespace hubless
