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

// Command-line front end: synth, train, eval, diagnose and cv.
// Reports go to stdout as JSON; artifacts go to disk.
// Exit codes: 0 success, 1 usage or validation error, 2 I/O or format error.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "hubless/calibration.hpp"
#include "hubless/dataio.hpp"
#include "hubless/error.hpp"
#include "hubless/hubness.hpp"
#include "hubless/inference.hpp"
#include "hubless/parallel.hpp"
#include "hubless/rng.hpp"
#include "hubless/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hubless {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitData = 2;

void Emit(const json& j) { std::cout << j.dump(2) << "\n"; }

// Flags shared by subcommands that train.
struct TrainFlags {
  TrainConfig cfg;
  std::string direction = "sem2feat";
  std::string skew_sum = "instances";

  void Add(CLI::App* app) {
    app->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    app->add_option("--alpha", cfg.alpha, "skewness loss weight")->capture_default_str();
    app->add_option("--lambda", cfg.lambda, "L2 weight on weight matrices")->capture_default_str();
    app->add_option("--tau", cfg.tau, "soft histogram temperature")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    app->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
    app->add_option("--epochs", cfg.epochs)->capture_default_str();
    app->add_option("--hidden", cfg.hidden, "hidden widths, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app->add_flag("--normalize", cfg.normalize_features, "unit-normalize feature rows");
    app->add_flag("--final-relu,!--no-final-relu", cfg.final_relu,
                  "ReLU after the output layer (default on)");
    app->add_option("--direction", direction, "sem2feat or feat2sem (experimental)")
        ->capture_default_str();
    app->add_option("--skew-sum", skew_sum, "instances or classes")->capture_default_str();
  }

  TrainConfig Resolve() {
    cfg.direction = ParseDirection(direction);
    if (skew_sum == "instances") {
      cfg.skew_sum = SkewSum::kInstances;
    } else if (skew_sum == "classes") {
      cfg.skew_sum = SkewSum::kClasses;
    } else {
      throw Error(ErrorCode::kConfigError, "--skew-sum must be instances or classes");
    }
    cfg.Validate();
    return cfg;
  }
};

struct DataFlags {
  std::string features;
  std::string labels;
  std::string embeddings;
  std::string manifest;
  bool normalize_embeddings = false;

  void Add(CLI::App* app, bool need_manifest = true) {
    app->add_option("--features", features, "feature bank (FBNK)")->required();
    app->add_option("--labels", labels, "label sidecar (default <features>.labels)");
    app->add_option("--embeddings", embeddings, "word vector text file")->required();
    auto* m = app->add_option("--manifest", manifest, "seen/unseen split JSON");
    if (need_manifest) m->required();
    app->add_flag("--normalize-embeddings", normalize_embeddings,
                  "unit-normalize semantic vectors on load");
  }
};

// Loads a bank and applies the run's feature normalization.
FeatureBank LoadBank(const std::string& path, const std::string& labels, bool normalize) {
  FeatureBank bank = LoadFeatureBank(path, labels);
  if (normalize) NormalizeRows(bank.features);
  return bank;
}

int RunSynth(const SynthSpec& spec, const std::string& out) {
  const SyntheticData d = GenerateSynthetic(spec);
  const fs::path dir(out);
  fs::create_directories(dir);
  SaveFeatureBank(d.seen, dir / "seen.fbnk");
  SaveFeatureBank(d.unseen, dir / "unseen.fbnk");
  SaveEmbeddingTable(d.table, dir / "embeddings.txt");
  SaveSplitManifest(d.manifest, dir / "manifest.json");
  Emit({{"command", "synth"},
        {"files",
         {(dir / "seen.fbnk").string(), (dir / "unseen.fbnk").string(),
          (dir / "embeddings.txt").string(), (dir / "manifest.json").string()}},
        {"seen_instances", d.seen.size()},
        {"unseen_instances", d.unseen.size()},
        {"feature_dim", spec.feature_dim},
        {"semantic_dim", spec.semantic_dim},
        {"seed", spec.seed}});
  return kExitOk;
}

json EpochJson(const EpochLog& row) {
  json j{{"epoch", row.epoch},   {"L_S", row.distance},         {"L_U", row.skewness},
         {"L_T", row.total},     {"hist_gap", row.hist_gap},    {"seen_top1", row.seen_top1}};
  j["skew_j1"] = std::isnan(row.skew_j1) ? json(nullptr) : json(row.skew_j1);
  return j;
}

int RunTrain(const DataFlags& data, TrainFlags& flags, const std::string& out) {
  const TrainConfig cfg = flags.Resolve();
  const FeatureBank seen = LoadFeatureBank(data.features, data.labels);
  const EmbeddingTable table = LoadEmbeddingTable(data.embeddings, data.normalize_embeddings);
  const SplitManifest manifest = LoadSplitManifest(data.manifest);
  manifest.Validate(table);
  const TrainRun run = Train(seen, table, manifest, cfg);
  SaveRun(run, out);
  json j{{"command", "train"}, {"run", out}, {"epochs_completed", run.log.size()},
         {"step_count", run.step_count}};
  j["final"] = run.log.empty() ? json(nullptr) : EpochJson(run.log.back());
  Emit(j);
  return kExitOk;
}

int RunEval(const DataFlags& data, const std::string& run_dir, const std::string& seen_features,
            const std::string& seen_labels, bool gzsl, double beta) {
  const TrainRun run = LoadRun(run_dir);
  const EmbeddingTable table = LoadEmbeddingTable(data.embeddings, data.normalize_embeddings);
  const SplitManifest manifest = LoadSplitManifest(data.manifest);
  manifest.Validate(table);
  const bool normalize = run.config.normalize_features;
  const FeatureBank unseen = LoadBank(data.features, data.labels, normalize);
  const Direction dir = run.config.direction;

  json echo{{"run", run_dir}, {"config", run.config}, {"beta", beta}};
  if (!gzsl) {
    const ClassPrototypes protos = BuildPrototypes(run.weights, dir, table, {}, manifest.unseen);
    Emit(ToJson(EvaluateZsl(unseen, protos, run.weights, dir), echo));
    return kExitOk;
  }
  if (seen_features.empty()) {
    throw Error(ErrorCode::kConfigError, "--gzsl needs --seen-features");
  }
  const FeatureBank seen = LoadBank(seen_features, seen_labels, normalize);
  const ClassPrototypes protos =
      BuildPrototypes(run.weights, dir, table, manifest.seen, manifest.unseen);
  Emit(ToJson(EvaluateGzsl(seen, unseen, protos, run.weights, dir, beta), echo));
  return kExitOk;
}

std::vector<std::string> PickClasses(const SplitManifest& m, const std::string& which) {
  if (which == "unseen") return m.unseen;
  if (which == "seen") return m.seen;
  if (which == "all") {
    std::vector<std::string> all = m.seen;
    all.insert(all.end(), m.unseen.begin(), m.unseen.end());
    return all;
  }
  throw Error(ErrorCode::kConfigError, "--classes must be unseen, seen or all");
}

struct DiagnoseFlags {
  std::string features, labels, run, embeddings, manifest, prototypes, prototype_labels;
  std::string classes = "unseen";
  std::string metric = "cosine";
  std::optional<std::string> direction;
  std::size_t j = 1;
  bool untrained = false;
  bool normalize_embeddings = false;
  TrainFlags train;  // architecture and seed of untrained prototypes
};

int RunDiagnose(DiagnoseFlags& f) {
  const Metric metric = ParseMetric(f.metric);
  json echo;
  Matrix queries;
  Matrix protos;
  std::vector<std::string> names;

  if (!f.prototypes.empty()) {
    // Bank against bank, no projection.
    queries = LoadFeatureBank(f.features, f.labels).features;
    protos = LoadFeatureBank(f.prototypes, f.prototype_labels).features;
    echo["prototypes"] = f.prototypes;
  } else {
    if (f.embeddings.empty() || f.manifest.empty()) {
      throw Error(ErrorCode::kConfigError,
                  "need --prototypes, or --embeddings and --manifest with --run or --untrained");
    }
    if (f.run.empty() == !f.untrained) {
      throw Error(ErrorCode::kConfigError, "give exactly one of --run and --untrained");
    }
    const EmbeddingTable table = LoadEmbeddingTable(f.embeddings, f.normalize_embeddings);
    const SplitManifest manifest = LoadSplitManifest(f.manifest);
    manifest.Validate(table);
    FeatureBank bank = LoadFeatureBank(f.features, f.labels);
    MlpWeights w;
    Direction dir;
    bool normalize = false;
    if (!f.run.empty()) {
      const TrainRun run = LoadRun(f.run);
      w = run.weights;
      dir = run.config.direction;
      normalize = run.config.normalize_features;
      if (f.direction && ParseDirection(*f.direction) != dir) {
        throw Error(ErrorCode::kConfigError, "--direction differs from the run's direction " +
                                                 std::string(DirectionName(dir)));
      }
      echo["run"] = f.run;
    } else {
      if (f.direction) f.train.direction = *f.direction;
      const TrainConfig cfg = f.train.Resolve();
      dir = cfg.direction;
      normalize = cfg.normalize_features;
      const bool s2f = dir == Direction::kSemanticToFeature;
      // The same draw Train starts from.
      w = InitWeights(s2f ? table.dim : bank.dim(), cfg.hidden, s2f ? bank.dim() : table.dim,
                      DeriveSeed(cfg.seed, 0), cfg.final_relu);
      echo["untrained"] = {{"seed", cfg.seed}, {"hidden", cfg.hidden},
                           {"final_relu", cfg.final_relu}};
    }
    if (normalize) NormalizeRows(bank.features);
    names = PickClasses(manifest, f.classes);
    queries = EmbedFeatures(w, dir, bank.features);
    protos = EmbedSemantics(w, dir, table.Gather(names));
    echo["direction"] = DirectionName(dir);
    echo["classes"] = f.classes;
  }
  json out = ToJson(ComputeHubnessReport(queries, protos, f.j, metric), names);
  out["config_echo"] = echo;
  Emit(out);
  return kExitOk;
}

int RunCv(const DataFlags& data, TrainFlags& flags, CvSpec& spec) {
  spec.base = flags.Resolve();
  spec.seed = spec.base.seed;
  const FeatureBank seen = LoadFeatureBank(data.features, data.labels);
  const EmbeddingTable table = LoadEmbeddingTable(data.embeddings, data.normalize_embeddings);
  const SplitManifest manifest = LoadSplitManifest(data.manifest);
  manifest.Validate(table);
  Emit(ToJson(MonteCarloCrossValidate(seen, table, manifest, spec), spec));
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Hubness-aware zero-shot classification over feature banks"};
  app.require_subcommand(1);
  app.fallthrough();  // --threads may follow the subcommand
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker cap (default HUBLESS_THREADS or all cores)");

  SynthSpec synth;
  std::string synth_out;
  auto* s = app.add_subcommand("synth", "write a synthetic benchmark");
  s->add_option("--out", synth_out, "output directory")->required();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--classes-seen", synth.seen_classes)->capture_default_str();
  s->add_option("--classes-unseen", synth.unseen_classes)->capture_default_str();
  s->add_option("--dim", synth.feature_dim, "feature width")->capture_default_str();
  s->add_option("--semantic-dim", synth.semantic_dim)->capture_default_str();
  s->add_option("--latent-dim", synth.latent_dim)->capture_default_str();
  s->add_option("--instances", synth.instances_per_class, "instances per class")
      ->capture_default_str();
  s->add_option("--spread", synth.cluster_spread, "cluster standard deviation")
      ->capture_default_str();
  s->add_option("--noise", synth.semantic_noise, "semantic vector noise")->capture_default_str();
  s->add_option("--offset", synth.centroid_offset, "common centroid offset")
      ->capture_default_str();

  DataFlags train_data;
  TrainFlags train_flags;
  std::string train_out;
  auto* t = app.add_subcommand("train", "train the semantic projection");
  train_data.Add(t);
  train_flags.Add(t);
  t->add_option("--out", train_out, "run directory")->required();

  DataFlags eval_data;
  std::string eval_run, eval_seen, eval_seen_labels;
  bool gzsl = false;
  double beta = 0.6;
  auto* e = app.add_subcommand("eval", "ZSL or GZSL accuracy of a run");
  eval_data.Add(e);
  e->add_option("--run", eval_run, "run directory")->required();
  e->add_flag("--gzsl", gzsl, "score over seen and unseen classes");
  e->add_option("--beta", beta, "seen-class score penalty")->capture_default_str();
  e->add_option("--seen-features", eval_seen, "seen test bank for --gzsl");
  e->add_option("--seen-labels", eval_seen_labels);

  DiagnoseFlags diag;
  auto* d = app.add_subcommand("diagnose", "occurrence skewness of nearest-neighbor search");
  d->add_option("--features", diag.features, "query bank")->required();
  d->add_option("--labels", diag.labels);
  d->add_option("--run", diag.run, "project prototypes with this run");
  d->add_flag("--untrained", diag.untrained, "project with freshly initialized weights");
  d->add_option("--embeddings", diag.embeddings);
  d->add_option("--manifest", diag.manifest);
  d->add_flag("--normalize-embeddings", diag.normalize_embeddings);
  d->add_option("--classes", diag.classes, "unseen, seen or all")->capture_default_str();
  d->add_option("--prototypes", diag.prototypes, "prototype bank instead of projection");
  d->add_option("--prototype-labels", diag.prototype_labels);
  d->add_option("--j", diag.j, "neighbors per query")->capture_default_str();
  d->add_option("--metric", diag.metric, "cosine or l2")->capture_default_str();
  d->add_option("--direction", diag.direction, "sem2feat or feat2sem");
  d->add_option("--seed", diag.train.cfg.seed, "seed of --untrained weights");
  d->add_option("--hidden", diag.train.cfg.hidden)->delimiter(',');
  d->add_flag("--final-relu,!--no-final-relu", diag.train.cfg.final_relu,
              "ReLU after the output layer of --untrained (default on)");
  d->add_flag("--normalize", diag.train.cfg.normalize_features);

  DataFlags cv_data;
  TrainFlags cv_flags;
  CvSpec cv;
  bool argmax_mean = false;
  std::size_t proxy = 0;
  auto* c = app.add_subcommand("cv", "Monte Carlo cross-validation of alpha, lambda and beta");
  cv_data.Add(c);
  cv_flags.Add(c);
  c->add_option("--repeats", cv.repeats)->capture_default_str();
  c->add_option("--grid-alpha", cv.alpha_grid)->delimiter(',')->capture_default_str();
  c->add_option("--grid-lambda", cv.lambda_grid)->delimiter(',')->capture_default_str();
  c->add_option("--grid-beta", cv.beta_grid)->delimiter(',')->capture_default_str();
  c->add_option("--holdout-fraction", cv.holdout_fraction)->capture_default_str();
  c->add_option("--proxy-unseen", proxy, "proxy-unseen classes per repeat (default ceil(p/5))");
  c->add_flag("--argmax-mean", argmax_mean, "pick the best mean score instead of averaging winners");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "hubless: " << err.what() << "\n\n";
    const auto chosen = app.get_subcommands();
    std::cerr << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitInvalid;
  }

  try {
    if (threads > 0) SetDefaultThreads(threads);
    if (*s) return RunSynth(synth, synth_out);
    if (*t) return RunTrain(train_data, train_flags, train_out);
    if (*e) return RunEval(eval_data, eval_run, eval_seen, eval_seen_labels, gzsl, beta);
    if (*d) return RunDiagnose(diag);
    if (*c) {
      if (proxy > 0) cv.proxy_unseen_count = proxy;
      cv.average_winners = !argmax_mean;
      return RunCv(cv_data, cv_flags, cv);
    }
  } catch (const Error& err) {
    std::cerr << "hubless: " << err.what() << "\n";
    return IsDataError(err.code()) ? kExitData : kExitInvalid;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "hubless: " << err.what() << "\n";
    return kExitData;
  } catch (const json::exception& err) {
    std::cerr << "hubless: malformed JSON: " << err.what() << "\n";
    return kExitData;
  }
  return kExitInvalid;
}

}  // namespace
}  // namespace hubless

int main(int argc, char** argv) {
  try {
    return hubless::Main(argc, argv);
  } catch (const std::exception& err) {
    std::cerr << "hubless: " << err.what() << "\n";
    return 1;
  }
}
