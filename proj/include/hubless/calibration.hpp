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

#ifndef HUBLESS_CALIBRATION_HPP_
#define HUBLESS_CALIBRATION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubless/dataio.hpp"
#include "hubless/losses.hpp"

namespace hubless {

struct CvSpec {
  std::size_t repeats = 10;
  // Fraction of each train-seen class's instances held out as the seen test
  // split for the GZSL score.
  double holdout_fraction = 0.2;
  // Seen classes moved to the proxy-unseen side per repeat; ceil(p/5) when
  // unset.
  std::optional<std::size_t> proxy_unseen_count;
  std::vector<double> alpha_grid = {0.7};
  std::vector<double> lambda_grid = {1e-4};
  std::vector<double> beta_grid = {0.6};
  std::uint64_t seed = 7;
  // true: average the per-repeat winners. false: take the grid point with
  // the best mean score across repeats.
  bool average_winners = true;
  // Everything except alpha, lambda and beta comes from here.
  TrainConfig base;

  void Validate(std::size_t seen_classes) const;
};

struct CvRepeat {
  std::vector<std::string> proxy_unseen;
  double alpha = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  // zsl_scores[a][l]: proxy-unseen top-1 for alpha_grid[a], lambda_grid[l].
  std::vector<std::vector<double>> zsl_scores;
  // hm_scores[b]: GZSL harmonic mean at beta_grid[b] for the winning model.
  std::vector<double> hm_scores;
};

struct CvResult {
  TrainConfig selected;
  double beta = 0.0;
  std::vector<CvRepeat> repeats;
  std::vector<std::vector<double>> mean_zsl_scores;
  std::vector<double> mean_hm_scores;
};

// Monte Carlo cross-validation over the seen classes. Each repeat splits
// the seen classes into train-seen and proxy-unseen, trains one model per
// (alpha, lambda) pair and keeps the pair with the best proxy-unseen ZSL
// top-1, then picks beta by GZSL harmonic mean on the held-out train-seen
// instances and the proxy-unseen instances. Repeats run concurrently.
CvResult MonteCarloCrossValidate(const FeatureBank& seen_bank, const EmbeddingTable& table,
                                 const SplitManifest& manifest, const CvSpec& spec);

nlohmann::json ToJson(const CvResult& result, const CvSpec& spec);

}  // namespace hubless

#endif  // HUBLESS_CALIBRATION_HPP_
