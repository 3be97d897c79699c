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

#include "hubless/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "hubless/error.hpp"
#include "hubless/inference.hpp"
#include "hubless/parallel.hpp"
#include "hubless/rng.hpp"
#include "hubless/trainer.hpp"

namespace hubless {

namespace {

std::size_t ProxyCount(const CvSpec& spec, std::size_t p) {
  return spec.proxy_unseen_count.value_or((p + 4) / 5);
}

std::size_t ArgmaxFirst(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

CvRepeat RunRepeat(const FeatureBank& seen_bank, const EmbeddingTable& table,
                   const SplitManifest& manifest, const CvSpec& spec, std::size_t index) {
  Rng rng(DeriveSeed(spec.seed, index));
  const std::size_t p = manifest.seen.size();
  const std::size_t k = ProxyCount(spec, p);

  std::vector<std::size_t> classes(p);
  for (std::size_t c = 0; c < p; ++c) classes[c] = c;
  rng.Shuffle(std::span<std::size_t>(classes));
  std::vector<bool> is_proxy(p, false);
  for (std::size_t i = 0; i < k; ++i) is_proxy[classes[i]] = true;

  CvRepeat rep;
  SplitManifest inner;
  for (std::size_t c = 0; c < p; ++c) {
    (is_proxy[c] ? inner.unseen : inner.seen).push_back(manifest.seen[c]);
  }
  rep.proxy_unseen = inner.unseen;

  // Per-class instance holdout on the train-seen side.
  const FeatureBank train_seen = SelectClasses(seen_bank, inner.seen);
  const FeatureBank proxy_bank = SelectClasses(seen_bank, inner.unseen);
  std::vector<std::vector<std::size_t>> by_class(inner.seen.size());
  for (std::size_t i = 0; i < train_seen.size(); ++i) by_class[train_seen.labels[i]].push_back(i);
  std::vector<std::size_t> fit_rows, test_rows;
  for (auto& rows : by_class) {
    rng.Shuffle(std::span<std::size_t>(rows));
    const auto held = static_cast<std::size_t>(
        std::floor(spec.holdout_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(held));
    fit_rows.insert(fit_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(held), rows.end());
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  auto subset = [&](const std::vector<std::size_t>& rows) {
    FeatureBank b;
    b.class_names = train_seen.class_names;
    b.features = GatherRows(train_seen.features, rows);
    for (std::size_t r : rows) b.labels.push_back(train_seen.labels[r]);
    return b;
  };
  const FeatureBank fit = subset(fit_rows);
  const FeatureBank test = subset(test_rows);
  if (test.size() == 0 || proxy_bank.size() == 0) {
    throw Error(ErrorCode::kConfigError, "cross-validation split left an empty evaluation set");
  }

  const bool normalize = spec.base.normalize_features;
  auto prepare = [normalize](FeatureBank b) {
    if (normalize) NormalizeRows(b.features);
    return b;
  };
  const FeatureBank proxy_eval = prepare(proxy_bank);
  const FeatureBank test_eval = prepare(test);

  TrainConfig cfg = spec.base;
  cfg.seed = DeriveSeed(spec.seed, 1000 + index);
  rep.zsl_scores.assign(spec.alpha_grid.size(), std::vector<double>(spec.lambda_grid.size(), 0.0));
  MlpWeights best_weights;
  double best_score = -1.0;
  for (std::size_t a = 0; a < spec.alpha_grid.size(); ++a) {
    for (std::size_t l = 0; l < spec.lambda_grid.size(); ++l) {
      cfg.alpha = spec.alpha_grid[a];
      cfg.lambda = spec.lambda_grid[l];
      TrainRun run = Train(fit, table, inner, cfg);
      const ClassPrototypes unseen_protos =
          BuildPrototypes(run.weights, cfg.direction, table, {}, inner.unseen);
      const double score =
          EvaluateZsl(proxy_eval, unseen_protos, run.weights, cfg.direction).top1_unseen;
      rep.zsl_scores[a][l] = score;
      if (score > best_score) {
        best_score = score;
        rep.alpha = cfg.alpha;
        rep.lambda = cfg.lambda;
        best_weights = std::move(run.weights);
      }
    }
  }

  const ClassPrototypes all =
      BuildPrototypes(best_weights, cfg.direction, table, inner.seen, inner.unseen);
  for (double beta : spec.beta_grid) {
    const EvalReport r = EvaluateGzsl(test_eval, proxy_eval, all, best_weights, cfg.direction, beta);
    rep.hm_scores.push_back(*r.harmonic_mean);
  }
  rep.beta = spec.beta_grid[ArgmaxFirst(rep.hm_scores)];
  return rep;
}

}  // namespace

void CvSpec::Validate(std::size_t seen_classes) const {
  if (repeats < 1) throw Error(ErrorCode::kConfigError, "repeats must be >= 1");
  if (alpha_grid.empty() || lambda_grid.empty() || beta_grid.empty()) {
    throw Error(ErrorCode::kConfigError, "hyperparameter grids must be nonempty");
  }
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorCode::kConfigError, "holdout fraction must lie in (0, 1)");
  }
  const std::size_t k = ProxyCount(*this, seen_classes);
  if (k < 1 || k >= seen_classes || seen_classes - k < 2) {
    throw Error(ErrorCode::kConfigError,
                "cannot hold out " + std::to_string(k) + " of " + std::to_string(seen_classes) +
                    " seen classes and keep two for training");
  }
  base.Validate();
}

CvResult MonteCarloCrossValidate(const FeatureBank& seen_bank, const EmbeddingTable& table,
                                 const SplitManifest& manifest, const CvSpec& spec) {
  spec.Validate(manifest.seen.size());
  CvResult result;
  result.repeats.resize(spec.repeats);
  ParallelFor(spec.repeats, [&](std::size_t r) {
    result.repeats[r] = RunRepeat(seen_bank, table, manifest, spec, r);
  });

  const std::size_t na = spec.alpha_grid.size();
  const std::size_t nl = spec.lambda_grid.size();
  result.mean_zsl_scores.assign(na, std::vector<double>(nl, 0.0));
  result.mean_hm_scores.assign(spec.beta_grid.size(), 0.0);
  for (const auto& rep : result.repeats) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t l = 0; l < nl; ++l) result.mean_zsl_scores[a][l] += rep.zsl_scores[a][l];
    }
    for (std::size_t b = 0; b < spec.beta_grid.size(); ++b) result.mean_hm_scores[b] += rep.hm_scores[b];
  }
  const double n = static_cast<double>(spec.repeats);
  for (auto& row : result.mean_zsl_scores) {
    for (double& v : row) v /= n;
  }
  for (double& v : result.mean_hm_scores) v /= n;

  result.selected = spec.base;
  if (spec.average_winners) {
    std::vector<double> alphas, lambdas, betas;
    for (const auto& rep : result.repeats) {
      alphas.push_back(rep.alpha);
      lambdas.push_back(rep.lambda);
      betas.push_back(rep.beta);
    }
    result.selected.alpha = Mean(alphas);
    result.selected.lambda = Mean(lambdas);
    result.beta = Mean(betas);
  } else {
    double best = -1.0;
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t l = 0; l < nl; ++l) {
        if (result.mean_zsl_scores[a][l] > best) {
          best = result.mean_zsl_scores[a][l];
          result.selected.alpha = spec.alpha_grid[a];
          result.selected.lambda = spec.lambda_grid[l];
        }
      }
    }
    result.beta = spec.beta_grid[ArgmaxFirst(result.mean_hm_scores)];
  }
  return result;
}

nlohmann::json ToJson(const CvResult& result, const CvSpec& spec) {
  nlohmann::json repeats = nlohmann::json::array();
  for (const auto& rep : result.repeats) {
    repeats.push_back({{"proxy_unseen", rep.proxy_unseen},
                       {"alpha", rep.alpha},
                       {"lambda", rep.lambda},
                       {"beta", rep.beta},
                       {"zsl_scores", rep.zsl_scores},
                       {"hm_scores", rep.hm_scores}});
  }
  nlohmann::json selected = result.selected;
  selected["beta"] = result.beta;
  return {
      {"repeats", std::move(repeats)},
      {"grids",
       {{"alpha", spec.alpha_grid}, {"lambda", spec.lambda_grid}, {"beta", spec.beta_grid}}},
      {"mean_scores", {{"zsl", result.mean_zsl_scores}, {"hm", result.mean_hm_scores}}},
      {"selection", spec.average_winners ? "average_winners" : "best_mean_score"},
      {"selected", std::move(selected)},
  };
}

}  // namespace hubless
